//! Bundled data.

use crate::pmf::ContingencyTable;

/// Occupational status of 3498 father/son pairs, fathers in rows, sons in
/// columns, eight ordered categories each.
pub const OCCUPATIONAL_COUNTS: [[u64; 8]; 8] = [
    [50, 19, 26, 8, 7, 11, 6, 2],
    [16, 40, 34, 18, 11, 20, 8, 3],
    [12, 35, 65, 66, 35, 88, 23, 21],
    [11, 20, 58, 110, 40, 183, 64, 32],
    [2, 8, 12, 23, 25, 46, 28, 12],
    [12, 28, 102, 162, 90, 554, 230, 177],
    [0, 6, 19, 40, 21, 158, 143, 71],
    [0, 3, 14, 32, 15, 126, 91, 106],
];

pub fn occupational() -> ContingencyTable {
    let rows: Vec<Vec<u64>> = OCCUPATIONAL_COUNTS.iter().map(|r| r.to_vec()).collect();
    ContingencyTable::from_rows(&rows).expect("valid fixture")
}
