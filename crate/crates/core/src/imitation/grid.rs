use std::fmt;

use crate::armsim::{Camera, Point2};
use crate::diffcore::Tensor;
use crate::error::{Error, Result};

pub const GRID: usize = 5;
pub const NUM_CELLS: usize = GRID * GRID;

/// One of the 25 regions of the image, `(0, 0)` top-left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridCell {
    row: u8,
    col: u8,
}

impl GridCell {
    pub fn new(row: usize, col: usize) -> Result<Self> {
        if row >= GRID || col >= GRID {
            return Err(Error::Bounds(format!("grid cell ({row}, {col}) outside 5x5")));
        }
        Ok(Self {
            row: row as u8,
            col: col as u8,
        })
    }

    pub fn row(self) -> usize {
        self.row as usize
    }

    pub fn col(self) -> usize {
        self.col as usize
    }

    /// Row-major one-hot index.
    pub fn index(self) -> usize {
        self.row() * GRID + self.col()
    }

    pub fn from_index(i: usize) -> Result<Self> {
        if i >= NUM_CELLS {
            return Err(Error::Index(format!("cell index {i} not in 0..25")));
        }
        Self::new(i / GRID, i % GRID)
    }

    pub fn all() -> impl Iterator<Item = GridCell> {
        (0..NUM_CELLS).map(|i| GridCell::from_index(i).expect("in range"))
    }

    /// Workspace position of the cell's center under `camera`.
    pub fn center(self, camera: &Camera) -> Point2 {
        let (ch, cw) = cell_size_px(camera);
        camera.unproject(
            (self.row() as f64 + 0.5) * ch - 0.5,
            (self.col() as f64 + 0.5) * cw - 0.5,
        )
    }
}

impl fmt::Display for GridCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Cell height and width in pixels.
pub fn cell_size_px(camera: &Camera) -> (f64, f64) {
    (
        camera.height as f64 / GRID as f64,
        camera.width as f64 / GRID as f64,
    )
}

/// Cell containing a pixel; boundaries are top/left inclusive.
pub fn cell_of_pixel(row_px: usize, col_px: usize, height: usize, width: usize) -> Result<GridCell> {
    if row_px >= height || col_px >= width {
        return Err(Error::Bounds(format!(
            "pixel ({row_px}, {col_px}) outside {height}x{width} image"
        )));
    }
    GridCell::new(GRID * row_px / height, GRID * col_px / width)
}

/// Cell of the pixel nearest to a workspace point.
pub fn cell_of_point(camera: &Camera, p: Point2) -> Result<GridCell> {
    let (r, c) = camera.workspace_to_pixel(p)?;
    cell_of_pixel(r, c, camera.height, camera.width)
}

/// Argmax of 25 scores; ties go to the lowest index.
pub fn decode_onehot(logits: &[f64]) -> Result<GridCell> {
    if logits.len() != NUM_CELLS {
        return Err(Error::Dimension(format!(
            "expected 25 scores, got {}",
            logits.len()
        )));
    }
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    GridCell::from_index(best)
}

pub fn encode_onehot(cell: GridCell) -> Tensor {
    let mut t = Tensor::zeros(&[NUM_CELLS]);
    t.data_mut()[cell.index()] = 1.0;
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_cells() {
        assert_eq!(cell_of_pixel(0, 0, 64, 64).unwrap(), GridCell::new(0, 0).unwrap());
        assert_eq!(cell_of_pixel(63, 63, 64, 64).unwrap(), GridCell::new(4, 4).unwrap());
        assert_eq!(cell_of_pixel(0, 40, 64, 64).unwrap(), GridCell::new(0, 3).unwrap());
        assert!(cell_of_pixel(64, 0, 64, 64).is_err());
    }

    #[test]
    fn cell_boundaries_are_top_left_inclusive() {
        // 64 / 5 = 12.8: cell 1 starts at pixel 13
        assert_eq!(cell_of_pixel(12, 12, 64, 64).unwrap(), GridCell::new(0, 0).unwrap());
        assert_eq!(cell_of_pixel(13, 13, 64, 64).unwrap(), GridCell::new(1, 1).unwrap());
        let mut counts = [0usize; NUM_CELLS];
        for r in 0..64 {
            for c in 0..64 {
                counts[cell_of_pixel(r, c, 64, 64).unwrap().index()] += 1;
            }
        }
        assert_eq!(counts.iter().sum::<usize>(), 64 * 64);
        assert!(counts.iter().all(|&n| n > 0));
    }

    #[test]
    fn decode_examples() {
        for (i, want) in [(0, (0, 0)), (3, (0, 3)), (24, (4, 4))] {
            let cell = decode_onehot(encode_onehot(GridCell::from_index(i).unwrap()).data()).unwrap();
            assert_eq!((cell.row(), cell.col()), want);
        }
    }

    #[test]
    fn decode_round_trips_and_breaks_ties_low() {
        for cell in GridCell::all() {
            assert_eq!(decode_onehot(encode_onehot(cell).data()).unwrap(), cell);
        }
        assert_eq!(decode_onehot(&[0.0; 25]).unwrap().index(), 0);
        assert!(decode_onehot(&[0.0; 24]).is_err());
    }

    #[test]
    fn centers_land_in_their_cells() {
        let cam = Camera::new(64, 64).unwrap();
        for cell in GridCell::all() {
            assert_eq!(cell_of_point(&cam, cell.center(&cam)).unwrap(), cell);
        }
    }
}
