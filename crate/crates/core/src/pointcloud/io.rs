use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::{Point, PointCloud};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Csv,
    PlyAscii,
}

impl CloudFormat {
    /// Guess the format from a file extension; anything that is not `.ply`
    /// is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("ply") => CloudFormat::PlyAscii,
            _ => CloudFormat::Csv,
        }
    }
}

pub fn load_cloud(path: &Path, format: CloudFormat) -> Result<PointCloud> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    match format {
        CloudFormat::Csv => read_csv(reader),
        CloudFormat::PlyAscii => read_ply(reader),
    }
}

pub fn save_cloud(cloud: &PointCloud, path: &Path, format: CloudFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        CloudFormat::Csv => write_csv(cloud, &mut w)?,
        CloudFormat::PlyAscii => write_ply(cloud, &mut w).map_err(|e| Error::io(path, e))?,
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn parse_field(record: &csv::StringRecord, idx: usize, name: &str, line: usize) -> Result<f64> {
    let raw = record
        .get(idx)
        .ok_or_else(|| Error::parse(line, format!("missing value for `{name}`")))?;
    raw.trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("`{raw}` is not a number ({name})")))
}

/// Read a CSV cloud with a header row. `x,y,z` are required; `nx,ny,nz`
/// are loaded as normals when all three are present. Other columns are
/// ignored.
pub fn read_csv<R: Read>(reader: R) -> Result<PointCloud> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let xyz = ["x", "y", "z"].map(|n| column(&headers, n).ok_or(n));
    let xyz = match xyz {
        [Ok(x), Ok(y), Ok(z)] => [x, y, z],
        other => {
            let missing = other.iter().find_map(|c| c.err()).unwrap_or("z");
            return Err(Error::MissingColumn(missing.to_string()));
        }
    };
    let nxyz = match ["nx", "ny", "nz"].map(|n| column(&headers, n)) {
        [Some(a), Some(b), Some(c)] => Some([a, b, c]),
        _ => None,
    };

    let mut points = Vec::new();
    let mut normals = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let read3 = |cols: [usize; 3], names: [&str; 3]| -> Result<Vector3<f64>> {
            Ok(Vector3::new(
                parse_field(&record, cols[0], names[0], line)?,
                parse_field(&record, cols[1], names[1], line)?,
                parse_field(&record, cols[2], names[2], line)?,
            ))
        };
        points.push(read3(xyz, ["x", "y", "z"])?);
        if let Some(cols) = nxyz {
            normals.push(read3(cols, ["nx", "ny", "nz"])?);
        }
    }
    let cloud = PointCloud::new(points)?;
    if nxyz.is_some() {
        cloud.with_normals(normals)
    } else {
        Ok(cloud)
    }
}

pub fn write_csv<W: Write>(cloud: &PointCloud, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["x", "y", "z"];
    if cloud.normals().is_some() {
        header.extend(["nx", "ny", "nz"]);
    }
    if cloud.densities().is_some() {
        header.push("density");
    }
    w.write_record(&header)?;
    for i in 0..cloud.len() {
        let p = cloud.points()[i];
        let mut row = vec![p.x.to_string(), p.y.to_string(), p.z.to_string()];
        if let Some(n) = cloud.normals() {
            row.extend([n[i].x, n[i].y, n[i].z].map(|v| v.to_string()));
        }
        if let Some(d) = cloud.densities() {
            row.push(d[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Read an ASCII 1.0 PLY file. Only the `vertex` element is used; its
/// `x`, `y`, `z` properties are required and `nx`, `ny`, `nz` become
/// normals when present. Elements other than `vertex` must come after it.
pub fn read_ply<R: Read>(reader: R) -> Result<PointCloud> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let mut next_line = || -> Result<Option<(usize, String)>> {
        match lines.next() {
            None => Ok(None),
            Some((i, Ok(l))) => Ok(Some((i + 1, l))),
            Some((i, Err(e))) => Err(Error::parse(i + 1, e.to_string())),
        }
    };

    match next_line()? {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(Error::parse(1, "missing `ply` magic")),
    }
    let mut vertex_count = None;
    let mut props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    let mut seen_format = false;
    loop {
        let (n, line) = next_line()?.ok_or_else(|| Error::parse(0, "unterminated header"))?;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                if tok.next() != Some("ascii") {
                    return Err(Error::parse(n, "only `format ascii 1.0` is supported"));
                }
                seen_format = true;
            }
            Some("element") => {
                let name = tok.next().unwrap_or_default();
                in_vertex = name == "vertex";
                if in_vertex {
                    let count = tok
                        .next()
                        .and_then(|c| c.parse::<usize>().ok())
                        .ok_or_else(|| Error::parse(n, "bad vertex count"))?;
                    vertex_count = Some(count);
                } else if vertex_count.is_none() {
                    return Err(Error::parse(n, "`vertex` must be the first element"));
                }
            }
            Some("property") if in_vertex => {
                let rest: Vec<&str> = tok.collect();
                if rest.first() == Some(&"list") {
                    return Err(Error::parse(n, "list properties on vertex unsupported"));
                }
                let name = rest
                    .last()
                    .ok_or_else(|| Error::parse(n, "property without name"))?;
                props.push(name.to_string());
            }
            Some("end_header") => break,
            _ => {}
        }
    }
    if !seen_format {
        return Err(Error::parse(0, "missing format line"));
    }
    let count = vertex_count.ok_or_else(|| Error::parse(0, "no vertex element"))?;
    let find = |name: &str| props.iter().position(|p| p == name);
    let xyz = match ["x", "y", "z"].map(find) {
        [Some(a), Some(b), Some(c)] => [a, b, c],
        cols => {
            let missing = ["x", "y", "z"][cols.iter().position(Option::is_none).unwrap()];
            return Err(Error::MissingColumn(missing.to_string()));
        }
    };
    let nxyz = match ["nx", "ny", "nz"].map(find) {
        [Some(a), Some(b), Some(c)] => Some([a, b, c]),
        _ => None,
    };

    let mut points = Vec::with_capacity(count);
    let mut normals = Vec::new();
    for _ in 0..count {
        let (n, line) = next_line()?.ok_or_else(|| Error::parse(0, "truncated vertex list"))?;
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(n, e.to_string()))?;
        if vals.len() < props.len() {
            return Err(Error::parse(n, "too few vertex values"));
        }
        points.push(Point::new(vals[xyz[0]], vals[xyz[1]], vals[xyz[2]]));
        if let Some(c) = nxyz {
            normals.push(Vector3::new(vals[c[0]], vals[c[1]], vals[c[2]]));
        }
    }
    let cloud = PointCloud::new(points)?;
    if nxyz.is_some() {
        cloud.with_normals(normals)
    } else {
        Ok(cloud)
    }
}

pub fn write_ply<W: Write>(cloud: &PointCloud, mut w: W) -> std::io::Result<()> {
    writeln!(w, "ply\nformat ascii 1.0\nelement vertex {}", cloud.len())?;
    writeln!(w, "property float x\nproperty float y\nproperty float z")?;
    if cloud.normals().is_some() {
        writeln!(w, "property float nx\nproperty float ny\nproperty float nz")?;
    }
    writeln!(w, "end_header")?;
    for (i, p) in cloud.points().iter().enumerate() {
        write!(w, "{} {} {}", p.x, p.y, p.z)?;
        if let Some(n) = cloud.normals() {
            write!(w, " {} {} {}", n[i].x, n[i].y, n[i].z)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_two_points() {
        let c = read_csv("x,y,z\n0,0,0\n1,0,0\n".as_bytes()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.points()[1], Point::new(1.0, 0.0, 0.0));
        assert!(c.normals().is_none());
    }

    #[test]
    fn csv_with_normals_and_extra_columns() {
        let src = "intensity,x,y,z,nx,ny,nz\n7,0,0,0,0,0,1\n8,1,2,3,0,0,1\n";
        let c = read_csv(src.as_bytes()).unwrap();
        assert_eq!(c.points()[1], Point::new(1.0, 2.0, 3.0));
        assert_eq!(c.normals().unwrap(), &[Vector3::z(), Vector3::z()]);
    }

    #[test]
    fn csv_partial_normals_are_ignored() {
        let c = read_csv("x,y,z,nx\n0,0,0,5\n".as_bytes()).unwrap();
        assert!(c.normals().is_none());
    }

    #[test]
    fn csv_missing_z() {
        match read_csv("x,y\n0,0\n".as_bytes()) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "z"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn csv_parse_failure_reports_line() {
        match read_csv("x,y,z\n0,0,0\n1,oops,0\n".as_bytes()) {
            Err(Error::ParseFailure { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected ParseFailure, got {other:?}"),
        }
    }

    #[test]
    fn csv_header_only_is_empty() {
        assert!(matches!(
            read_csv("x,y,z\n".as_bytes()),
            Err(Error::EmptyCloud)
        ));
    }

    #[test]
    fn ply_roundtrip_through_writer() {
        let c = PointCloud::from_xyz(&[[0.5, -1.0, 2.0], [3.0, 4.0, 5.0]]).unwrap();
        let mut buf = Vec::new();
        write_ply(&c, &mut buf).unwrap();
        let back = read_ply(buf.as_slice()).unwrap();
        assert_eq!(back.points(), c.points());
    }

    #[test]
    fn ply_requires_ascii() {
        let src = "ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(
            read_ply(src.as_bytes()),
            Err(Error::ParseFailure { .. })
        ));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(CloudFormat::from_path(Path::new("a.PLY")), CloudFormat::PlyAscii);
        assert_eq!(CloudFormat::from_path(Path::new("a.csv")), CloudFormat::Csv);
    }
}
