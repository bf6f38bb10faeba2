//! Human-readable dumps of the quantiser tables and FDPQ weight maps.

use std::fmt::Write as _;

use crate::fdpq::weight_map;
use crate::quant::{qstep_from_qp, Qp, MF, SF};
use crate::transform::TbSize;

/// MF/SF table for QP 0..5 followed by the 4x4 and 8x8 weight maps, all to
/// four decimals. Map rows are `y`, cells within a row are `x`.
pub fn dump_tables() -> String {
    let mut s = String::new();
    writeln!(s, "# qp qstep mf sf").unwrap();
    for qp in 0..6u8 {
        let step = qstep_from_qp(Qp::new(qp as i64).expect("in range"));
        writeln!(s, "{qp} {step:.4} {} {}", MF[qp as usize], SF[qp as usize]).unwrap();
    }
    for size in [TbSize::N4, TbSize::N8] {
        let n = size.n();
        let map = weight_map(size);
        writeln!(s, "\n# {n}x{n} weight map").unwrap();
        for y in 0..n {
            let cells: Vec<String> = (0..n)
                .map(|x| format!("d={:.4} w={:.4}", map.d_at(x, y), map.w_at(x, y)))
                .collect();
            writeln!(s, "{}", cells.join(" | ")).unwrap();
        }
    }
    s
}

/// `x,y,d,w` for every position of one block size.
pub fn dump_weights(size: TbSize) -> String {
    let map = weight_map(size);
    let n = size.n();
    let mut s = String::from("x,y,d,w\n");
    for y in 0..n {
        for x in 0..n {
            writeln!(s, "{x},{y},{:.6},{:.6}", map.d_at(x, y), map.w_at(x, y)).unwrap();
        }
    }
    s
}
