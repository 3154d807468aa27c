#![allow(dead_code)]

use std::path::Path;

use vminmax::cli;
use vminmax::mesh::{self, Shape};

pub fn run(args: &[&str]) -> i32 {
    let mut full = vec!["vminmax"];
    full.extend_from_slice(args);
    cli::run(full)
}

pub fn run_in(dir: &Path, args: &[&str]) -> i32 {
    let mut full: Vec<&str> = args.to_vec();
    full.extend_from_slice(&["--out", dir.to_str().unwrap()]);
    run(&full)
}

/// IMM4 text of the icosahedron with vertex 1 moved onto vertex 0.
pub fn degenerate_imm4() -> String {
    let imm = mesh::generate(Shape::parse("equator:0").unwrap()).unwrap();
    let text = mesh::write_imm4(&imm);
    let lines: Vec<&str> = text.lines().collect();
    let mut out = lines.clone();
    out[2] = lines[1];
    out.join("\n") + "\n"
}

/// Lines of a CSV file other than the `# threads` header line.
pub fn without_threads_line(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .filter(|l| !l.starts_with("# threads"))
        .collect::<Vec<_>>()
        .join("\n")
}
