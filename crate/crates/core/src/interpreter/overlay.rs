use thiserror::Error;

use crate::grid::{GridSpec, LabelPlacement};
use crate::sim::Frame;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OverlayError {
    #[error("{width}x{height} frame is smaller than one pixel per cell of a {columns}x{rows} grid")]
    FrameTooSmall {
        width: u32,
        height: u32,
        columns: u16,
        rows: u16,
    },
}

const GLYPH_W: u32 = 3;
const GLYPH_H: u32 = 5;
const LABEL_BG: [u8; 3] = [0, 0, 0];

/// 3x5 bitmaps, rows top to bottom, `1` = ink.
fn glyph(c: char) -> Option<&'static str> {
    Some(match c {
        '0' => "111101101101111",
        '1' => "010110010010111",
        '2' => "111001111100111",
        '3' => "111001111001111",
        '4' => "101101111001001",
        '5' => "111100111001111",
        '6' => "111100111101111",
        '7' => "111001001001001",
        '8' => "111101111101111",
        '9' => "111101111001111",
        'A' => "010101111101101",
        'B' => "110101110101110",
        'C' => "011100100100011",
        'D' => "110101101101110",
        'E' => "111100110100111",
        'F' => "111100110100100",
        'G' => "011100101101011",
        'H' => "101101111101101",
        'I' => "111010010010111",
        'J' => "001001001101010",
        'K' => "101101110101101",
        'L' => "100100100100111",
        'M' => "101111111101101",
        'N' => "110101101101101",
        'O' => "010101101101010",
        'P' => "110101110100100",
        'Q' => "010101101110011",
        'R' => "110101110101101",
        'S' => "011100010001110",
        'T' => "111010010010010",
        'U' => "101101101101111",
        'V' => "101101101101010",
        'W' => "101101111111101",
        'X' => "101101010101101",
        'Y' => "101101010010010",
        'Z' => "111001010100111",
        _ => return None,
    })
}

/// Width and height of a label of `len` glyphs at `scale`, with a one pixel pad on
/// every side.
fn label_box(len: u32, scale: u32) -> (u32, u32) {
    let w = len * GLYPH_W * scale + (len.saturating_sub(1)) * scale + 2;
    let h = GLYPH_H * scale + 2;
    (w, h)
}

fn draw_label(frame: &mut Frame, text: &str, x0: u32, y0: u32, scale: u32, color: [u8; 3]) {
    let len = text.chars().count() as u32;
    let (w, h) = label_box(len, scale);
    for y in y0..(y0 + h).min(frame.height()) {
        for x in x0..(x0 + w).min(frame.width()) {
            frame.set_pixel(x, y, LABEL_BG);
        }
    }
    for (i, c) in text.chars().enumerate() {
        let Some(bits) = glyph(c) else { continue };
        let gx = x0 + 1 + i as u32 * (GLYPH_W + 1) * scale;
        for (k, b) in bits.bytes().enumerate() {
            if b != b'1' {
                continue;
            }
            let (col, row) = (k as u32 % GLYPH_W, k as u32 / GLYPH_W);
            for dy in 0..scale {
                for dx in 0..scale {
                    let (x, y) = (gx + col * scale + dx, y0 + 1 + row * scale + dy);
                    if x < frame.width() && y < frame.height() {
                        frame.set_pixel(x, y, color);
                    }
                }
            }
        }
    }
}

/// Glyph scale for labels of `len` characters: about a sixteenth of the cell, at most
/// 4, shrunk until the label fits. `None` when even scale 1 does not fit.
fn fitting_scale(len: u32, cell_w: u32, cell_h: u32) -> Option<u32> {
    let preferred = (cell_w.min(cell_h) / 16).clamp(1, 4);
    (1..=preferred).rev().find(|&s| {
        let (w, h) = label_box(len, s);
        w + 2 <= cell_w && h + 2 <= cell_h
    })
}

/// Copy of `frame` with one-pixel grid lines at every interior cell boundary and cell
/// labels. Line positions are `k * extent / cells`, the same split `GridSpec::cell_at`
/// uses, so a label drawn in a cell names the cell its pixels map to.
pub fn overlay_grid(frame: &Frame, spec: &GridSpec) -> Result<Frame, OverlayError> {
    let (width, height) = (frame.width(), frame.height());
    let (columns, rows) = (spec.columns(), spec.rows());
    if width < u32::from(columns) || height < u32::from(rows) {
        return Err(OverlayError::FrameTooSmall {
            width,
            height,
            columns,
            rows,
        });
    }
    let mut out = frame.clone();
    let xs = GridSpec::line_offsets(width, columns);
    let ys = GridSpec::line_offsets(height, rows);
    for &x in &xs {
        for y in 0..height {
            out.set_pixel(x, y, spec.line_color);
        }
    }
    for &y in &ys {
        for x in 0..width {
            out.set_pixel(x, y, spec.line_color);
        }
    }

    let starts = |offsets: &[u32]| -> Vec<u32> { std::iter::once(0).chain(offsets.iter().map(|o| o + 1)).collect() };
    let col_starts = starts(&xs);
    let row_starts = starts(&ys);
    let cell_w = width / u32::from(columns);
    let cell_h = height / u32::from(rows);

    match spec.labels {
        LabelPlacement::None => {}
        LabelPlacement::Margin => {
            let digits = rows.to_string().len() as u32;
            if let Some(scale) = fitting_scale(digits.max(1), cell_w, cell_h) {
                for (c, &x) in col_starts.iter().enumerate() {
                    let (w, _) = label_box(1, scale);
                    let x = x + (cell_w.saturating_sub(w)) / 2;
                    let text = GridSpec::column_label(c as u16).to_string();
                    draw_label(&mut out, &text, x, 1, scale, spec.label_color);
                }
                for (r, &y) in row_starts.iter().enumerate() {
                    let text = (r + 1).to_string();
                    let (_, h) = label_box(text.len() as u32, scale);
                    let y = y + (cell_h.saturating_sub(h)) / 2;
                    draw_label(&mut out, &text, 1, y, scale, spec.label_color);
                }
            }
        }
        LabelPlacement::CellCorner => {
            let longest = 1 + rows.to_string().len() as u32;
            if let Some(scale) = fitting_scale(longest, cell_w, cell_h) {
                for (c, &x) in col_starts.iter().enumerate() {
                    for (r, &y) in row_starts.iter().enumerate() {
                        let text = format!("{}{}", GridSpec::column_label(c as u16), r + 1);
                        draw_label(&mut out, &text, x + 1, y + 1, scale, spec.label_color);
                    }
                }
            }
        }
    }
    Ok(out)
}
