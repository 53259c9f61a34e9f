//! Letter-number grid used both to overlay frames and to map projected points to cells.
//!
//! Columns are lettered left to right starting at `A`; rows are numbered top to bottom
//! starting at `1`. A point given in normalized screen coordinates (`u` right, `v` down,
//! both in `[0, 1]`) maps to exactly one cell.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_COLUMNS: u16 = 26;
pub const MAX_ROWS: u16 = 99;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("grid needs at least 2 columns and 2 rows, got {columns}x{rows}")]
    TooFewCells { columns: u16, rows: u16 },
    #[error("grid supports at most {MAX_COLUMNS} columns and {MAX_ROWS} rows, got {columns}x{rows}")]
    TooManyCells { columns: u16, rows: u16 },
    #[error("invalid cell label {0:?}")]
    BadLabel(String),
    #[error("cell {label} is outside a {columns}x{rows} grid")]
    OutOfGrid { label: String, columns: u16, rows: u16 },
}

/// Where the column and row labels are drawn on an overlaid frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelPlacement {
    /// Inside each cell's top-left corner (column letter and row number together).
    CellCorner,
    /// Column letters along the top margin, row numbers along the left margin.
    #[default]
    Margin,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    columns: u16,
    rows: u16,
    pub line_color: [u8; 3],
    pub label_color: [u8; 3],
    pub labels: LabelPlacement,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            columns: 8,
            rows: 8,
            line_color: [255, 0, 255],
            label_color: [255, 255, 0],
            labels: LabelPlacement::Margin,
        }
    }
}

impl GridSpec {
    pub fn new(columns: u16, rows: u16) -> Result<Self, GridError> {
        if columns < 2 || rows < 2 {
            return Err(GridError::TooFewCells { columns, rows });
        }
        if columns > MAX_COLUMNS || rows > MAX_ROWS {
            return Err(GridError::TooManyCells { columns, rows });
        }
        Ok(Self {
            columns,
            rows,
            ..Self::default()
        })
    }

    pub fn columns(&self) -> u16 {
        self.columns
    }

    pub fn rows(&self) -> u16 {
        self.rows
    }

    /// Cell containing the normalized screen point `(u, v)`. Points on the far edges
    /// belong to the last column/row; values outside `[0, 1]` are clamped.
    pub fn cell_at(&self, u: f64, v: f64) -> GridCell {
        let pick = |t: f64, n: u16| -> u16 {
            let idx = (t.clamp(0.0, 1.0) * f64::from(n)).floor() as i64;
            idx.clamp(0, i64::from(n) - 1) as u16
        };
        GridCell {
            column: pick(u, self.columns),
            row: pick(v, self.rows),
        }
    }

    pub fn contains(&self, cell: GridCell) -> bool {
        cell.column < self.columns && cell.row < self.rows
    }

    /// Parses a label like `"D3"` and checks it lies inside this grid.
    pub fn parse_cell(&self, label: &str) -> Result<GridCell, GridError> {
        let cell: GridCell = label.parse()?;
        if !self.contains(cell) {
            return Err(GridError::OutOfGrid {
                label: label.trim().to_string(),
                columns: self.columns,
                rows: self.rows,
            });
        }
        Ok(cell)
    }

    pub fn column_label(index: u16) -> char {
        (b'A' + index as u8) as char
    }

    /// Comma-separated column letters and row range, e.g. `"columns A-H, rows 1-8"`.
    pub fn describe_labels(&self) -> String {
        format!(
            "columns A-{}, rows 1-{}",
            Self::column_label(self.columns - 1),
            self.rows
        )
    }

    /// Pixel offsets of the interior grid lines along an axis of `extent` pixels split
    /// into `cells` cells.
    pub fn line_offsets(extent: u32, cells: u16) -> Vec<u32> {
        (1..u32::from(cells))
            .map(|k| (u64::from(k) * u64::from(extent) / u64::from(cells)) as u32)
            .collect()
    }

    /// Column index range considered "centered": the single middle column for odd
    /// counts, the two middle columns for even counts.
    pub fn center_columns(&self) -> (u16, u16) {
        if self.columns % 2 == 1 {
            (self.columns / 2, self.columns / 2)
        } else {
            (self.columns / 2 - 1, self.columns / 2)
        }
    }
}

/// Zero-based grid cell. Displays as its letter-number label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GridCell {
    pub column: u16,
    pub row: u16,
}

impl GridCell {
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl Ord for GridCell {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.column, self.row).cmp(&(other.column, other.row))
    }
}

impl PartialOrd for GridCell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GridCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", GridSpec::column_label(self.column), self.row + 1)
    }
}

impl FromStr for GridCell {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || GridError::BadLabel(s.to_string());
        let mut chars = t.chars();
        let letter = chars.next().ok_or_else(bad)?.to_ascii_uppercase();
        if !letter.is_ascii_uppercase() {
            return Err(bad());
        }
        let digits = chars.as_str();
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let row: u16 = digits.parse().map_err(|_| bad())?;
        if row == 0 || row > MAX_ROWS {
            return Err(bad());
        }
        Ok(GridCell {
            column: u16::from(letter as u8 - b'A'),
            row: row - 1,
        })
    }
}

impl TryFrom<String> for GridCell {
    type Error = GridError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<GridCell> for String {
    fn from(c: GridCell) -> String {
        c.to_string()
    }
}
