//! Gmsh MSH 2.2 ASCII reader and writer.
//!
//! Supported element types are points (15), lines (1), triangles (2) and tetrahedra (4).
//! Sections other than `$MeshFormat`, `$PhysicalNames`, `$Nodes` and `$Elements` are kept
//! verbatim and written back unchanged.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::MeshError;
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementType {
    Point,
    Line,
    Triangle,
    Tetrahedron,
}

impl ElementType {
    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            15 => Some(ElementType::Point),
            1 => Some(ElementType::Line),
            2 => Some(ElementType::Triangle),
            4 => Some(ElementType::Tetrahedron),
            _ => None,
        }
    }

    pub fn code(self) -> u32 {
        match self {
            ElementType::Point => 15,
            ElementType::Line => 1,
            ElementType::Triangle => 2,
            ElementType::Tetrahedron => 4,
        }
    }

    pub fn num_nodes(self) -> usize {
        match self {
            ElementType::Point => 1,
            ElementType::Line => 2,
            ElementType::Triangle => 3,
            ElementType::Tetrahedron => 4,
        }
    }

    pub fn dim(self) -> usize {
        self.num_nodes() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub kind: ElementType,
    /// Physical tag (first tag of the record); 0 when the record carries no tags.
    pub physical: i32,
    /// Remaining tags (elementary entity, partitions, ...).
    pub extra_tags: Vec<i32>,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalName {
    pub dim: usize,
    pub tag: i32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MshDocument {
    pub version: String,
    /// Node id -> coordinates.
    pub nodes: BTreeMap<usize, Vec3>,
    /// Element id -> element.
    pub elements: BTreeMap<usize, Element>,
    pub physical_names: Vec<PhysicalName>,
    /// Unrecognized sections as (name without `$`, body lines).
    pub extra_sections: Vec<(String, Vec<String>)>,
}

impl MshDocument {
    pub fn physical_name(&self, dim: usize, tag: i32) -> Option<&str> {
        self.physical_names.iter().find(|p| p.dim == dim && p.tag == tag).map(|p| p.name.as_str())
    }

    pub fn count(&self, kind: ElementType) -> usize {
        self.elements.values().filter(|e| e.kind == kind).count()
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            let t = l.trim();
            if !t.is_empty() {
                return Some((i + 1, t));
            }
        }
        None
    }

    fn expect_line(&mut self, what: &str) -> Result<(usize, &'a str), MeshError> {
        self.next_line().ok_or_else(|| MeshError::Parse {
            line: 0,
            message: format!("unexpected end of file while reading {what}"),
        })
    }
}

fn perr(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse { line, message: message.into() }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, MeshError> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| perr(line, format!("invalid {what} '{tok}'")))
}

/// Parses an MSH 2.2 ASCII document.
pub fn parse_msh(text: &str) -> Result<MshDocument, MeshError> {
    let mut lines = Lines { inner: text.lines().enumerate() };
    let mut doc = MshDocument::default();
    let mut saw_format = false;

    while let Some((ln, line)) = lines.next_line() {
        let Some(section) = line.strip_prefix('$') else {
            return Err(perr(ln, format!("expected section header, found '{line}'")));
        };
        match section {
            "MeshFormat" => {
                let (ln, header) = lines.expect_line("mesh format")?;
                let mut it = header.split_whitespace();
                let version: String = parse_num(it.next(), ln, "format version")?;
                let file_type: u32 = parse_num(it.next(), ln, "file type")?;
                let _data_size: u32 = parse_num(it.next(), ln, "data size")?;
                if !version.starts_with("2.") {
                    return Err(perr(ln, format!("unsupported MSH version {version} (expected 2.2)")));
                }
                if file_type != 0 {
                    return Err(perr(ln, "binary MSH files are not supported"));
                }
                doc.version = version;
                expect_end(&mut lines, "MeshFormat")?;
                saw_format = true;
            }
            "PhysicalNames" => {
                let (ln, count) = lines.expect_line("physical name count")?;
                let count: usize = parse_num(Some(count), ln, "physical name count")?;
                for _ in 0..count {
                    let (ln, rec) = lines.expect_line("physical name")?;
                    let mut it = rec.splitn(3, char::is_whitespace);
                    let dim: usize = parse_num(it.next(), ln, "physical dimension")?;
                    let tag: i32 = parse_num(it.next(), ln, "physical tag")?;
                    let name = it
                        .next()
                        .map(|s| s.trim().trim_matches('"').to_string())
                        .ok_or_else(|| perr(ln, "missing physical name"))?;
                    doc.physical_names.push(PhysicalName { dim, tag, name });
                }
                expect_end(&mut lines, "PhysicalNames")?;
            }
            "Nodes" => {
                if !saw_format {
                    return Err(perr(ln, "$Nodes before $MeshFormat"));
                }
                let (ln, count) = lines.expect_line("node count")?;
                let count: usize = parse_num(Some(count), ln, "node count")?;
                for _ in 0..count {
                    let (ln, rec) = lines.expect_line("node")?;
                    let mut it = rec.split_whitespace();
                    let id: usize = parse_num(it.next(), ln, "node id")?;
                    let x: f64 = parse_num(it.next(), ln, "x coordinate")?;
                    let y: f64 = parse_num(it.next(), ln, "y coordinate")?;
                    let z: f64 = parse_num(it.next(), ln, "z coordinate")?;
                    if doc.nodes.insert(id, [x, y, z]).is_some() {
                        return Err(perr(ln, format!("duplicate node id {id}")));
                    }
                }
                expect_end(&mut lines, "Nodes")?;
            }
            "Elements" => {
                let (ln, count) = lines.expect_line("element count")?;
                let count: usize = parse_num(Some(count), ln, "element count")?;
                for _ in 0..count {
                    let (ln, rec) = lines.expect_line("element")?;
                    let mut it = rec.split_whitespace();
                    let id: usize = parse_num(it.next(), ln, "element id")?;
                    let code: u32 = parse_num(it.next(), ln, "element type")?;
                    let kind = ElementType::from_code(code)
                        .ok_or_else(|| perr(ln, format!("unsupported element type {code}")))?;
                    let ntags: usize = parse_num(it.next(), ln, "tag count")?;
                    let mut tags = Vec::with_capacity(ntags);
                    for _ in 0..ntags {
                        tags.push(parse_num::<i32>(it.next(), ln, "tag")?);
                    }
                    let mut nodes = Vec::with_capacity(kind.num_nodes());
                    for tok in it {
                        nodes.push(parse_num::<usize>(Some(tok), ln, "node reference")?);
                    }
                    if nodes.len() != kind.num_nodes() {
                        return Err(perr(
                            ln,
                            format!("element {id}: expected {} nodes, found {}", kind.num_nodes(), nodes.len()),
                        ));
                    }
                    if let Some(missing) = nodes.iter().find(|n| !doc.nodes.contains_key(n)) {
                        return Err(perr(ln, format!("element {id} references missing node {missing}")));
                    }
                    let physical = tags.first().copied().unwrap_or(0);
                    let extra_tags = tags.into_iter().skip(1).collect();
                    let element = Element { kind, physical, extra_tags, nodes };
                    if doc.elements.insert(id, element).is_some() {
                        return Err(perr(ln, format!("duplicate element id {id}")));
                    }
                }
                expect_end(&mut lines, "Elements")?;
            }
            other => {
                let name = other.to_string();
                let end = format!("$End{name}");
                let mut body = Vec::new();
                loop {
                    let (_, l) = lines.expect_line(&end)?;
                    if l == end {
                        break;
                    }
                    body.push(l.to_string());
                }
                doc.extra_sections.push((name, body));
            }
        }
    }
    if !saw_format {
        return Err(perr(1, "missing $MeshFormat header"));
    }
    Ok(doc)
}

fn expect_end(lines: &mut Lines<'_>, name: &str) -> Result<(), MeshError> {
    let (ln, l) = lines.expect_line(name)?;
    if l != format!("$End{name}") {
        return Err(perr(ln, format!("expected $End{name}, found '{l}'")));
    }
    Ok(())
}

/// Writes the document as MSH 2.2 ASCII.
pub fn write_msh(doc: &MshDocument) -> String {
    let mut out = String::new();
    let version = if doc.version.is_empty() { "2.2" } else { &doc.version };
    let _ = writeln!(out, "$MeshFormat\n{version} 0 8\n$EndMeshFormat");
    if !doc.physical_names.is_empty() {
        let _ = writeln!(out, "$PhysicalNames\n{}", doc.physical_names.len());
        for p in &doc.physical_names {
            let _ = writeln!(out, "{} {} \"{}\"", p.dim, p.tag, p.name);
        }
        out.push_str("$EndPhysicalNames\n");
    }
    let _ = writeln!(out, "$Nodes\n{}", doc.nodes.len());
    for (id, p) in &doc.nodes {
        let _ = writeln!(out, "{id} {:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    out.push_str("$EndNodes\n");
    let _ = writeln!(out, "$Elements\n{}", doc.elements.len());
    for (id, e) in &doc.elements {
        let _ = write!(out, "{id} {} {}", e.kind.code(), 1 + e.extra_tags.len());
        let _ = write!(out, " {}", e.physical);
        for t in &e.extra_tags {
            let _ = write!(out, " {t}");
        }
        for n in &e.nodes {
            let _ = write!(out, " {n}");
        }
        out.push('\n');
    }
    out.push_str("$EndElements\n");
    for (name, body) in &doc.extra_sections {
        let _ = writeln!(out, "${name}");
        for l in body {
            let _ = writeln!(out, "{l}");
        }
        let _ = writeln!(out, "$End{name}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE_TET: &str = "$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
$EndNodes
$Elements
1
1 4 2 1 1 1 2 3 4
$EndElements
";

    #[test]
    fn parses_single_tetrahedron() {
        let doc = parse_msh(SINGLE_TET).unwrap();
        assert_eq!(doc.nodes.len(), 4);
        assert_eq!(doc.elements.len(), 1);
        assert_eq!(doc.count(ElementType::Tetrahedron), 1);
        assert_eq!(doc.elements[&1].physical, 1);
    }

    #[test]
    fn rejects_quadrangle_with_line_number() {
        let text = SINGLE_TET.replace("1 4 2 1 1 1 2 3 4", "1 3 2 1 1 1 2 3 4");
        match parse_msh(&text) {
            Err(MeshError::Parse { line, message }) => {
                assert_eq!(line, 13);
                assert!(message.contains("unsupported element type 3"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_dangling_node() {
        let text = SINGLE_TET.replace("1 4 2 1 1 1 2 3 4", "1 4 2 1 1 1 2 3 9");
        assert!(matches!(parse_msh(&text), Err(MeshError::Parse { line: 13, .. })));
    }

    #[test]
    fn rejects_bad_header() {
        let text = SINGLE_TET.replace("2.2 0 8", "4.1 0 8");
        assert!(matches!(parse_msh(&text), Err(MeshError::Parse { line: 2, .. })));
        assert!(parse_msh("$Nodes\n0\n$EndNodes\n").is_err());
    }

    #[test]
    fn keeps_unknown_sections() {
        let text = format!("{SINGLE_TET}$Comments\nhello world\n$EndComments\n");
        let doc = parse_msh(&text).unwrap();
        assert_eq!(doc.extra_sections, vec![("Comments".to_string(), vec!["hello world".to_string()])]);
        let again = parse_msh(&write_msh(&doc)).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn physical_names_with_spaces() {
        let text = SINGLE_TET.replace("$Nodes", "$PhysicalNames\n1\n3 1 \"MATRIX_0\"\n$EndPhysicalNames\n$Nodes");
        let doc = parse_msh(&text).unwrap();
        assert_eq!(doc.physical_name(3, 1), Some("MATRIX_0"));
    }
}
