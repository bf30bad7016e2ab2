use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::EnvError;

/// Axis-aligned direction on the grid. `x` grows east, `y` grows south.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dir {
    East,
    South,
    West,
    North,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::East, Dir::South, Dir::West, Dir::North];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::East => (1, 0),
            Dir::South => (0, 1),
            Dir::West => (-1, 0),
            Dir::North => (0, -1),
        }
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::East => Dir::West,
            Dir::South => Dir::North,
            Dir::West => Dir::East,
            Dir::North => Dir::South,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Floor,
    Wall(u8),
}

/// A picture-frame-like marker on one face of a wall cell. `face` points from
/// the wall cell toward the floor cell it is visible from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decor {
    pub x: i32,
    pub y: i32,
    pub face: Dir,
    pub color: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MazeMap {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    decor: Vec<Decor>,
    palette: BTreeMap<u8, [f64; 3]>,
}

/// On-disk JSON layout. Row strings use `.` for floor and `0`-`9` for a wall
/// with that palette color id.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub width: usize,
    pub height: usize,
    pub rows: Vec<String>,
    #[serde(default)]
    pub decor: Vec<Decor>,
    pub palette: BTreeMap<String, [f64; 3]>,
}

impl MazeMap {
    /// Validates and builds a map. `cells` is row-major.
    pub fn new(
        width: usize,
        height: usize,
        cells: Vec<Cell>,
        decor: Vec<Decor>,
        palette: BTreeMap<u8, [f64; 3]>,
    ) -> Result<Self, EnvError> {
        if width < 3 || height < 3 {
            return Err(EnvError::InvalidMap(format!(
                "map must be at least 3x3, got {width}x{height}"
            )));
        }
        if cells.len() != width * height {
            return Err(EnvError::InvalidMap(format!(
                "expected {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        for (&id, rgb) in &palette {
            if rgb.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(EnvError::InvalidMap(format!(
                    "palette color {id} has components outside [0, 1]"
                )));
            }
        }
        let map = Self {
            width,
            height,
            cells,
            decor,
            palette,
        };
        for y in 0..height {
            for x in 0..width {
                let cell = map.cells[y * width + x];
                let boundary = x == 0 || y == 0 || x == width - 1 || y == height - 1;
                if boundary && cell == Cell::Floor {
                    return Err(EnvError::InvalidMap(format!(
                        "boundary cell ({x}, {y}) is not a wall"
                    )));
                }
                if let Cell::Wall(id) = cell {
                    if !map.palette.contains_key(&id) {
                        return Err(EnvError::InvalidMap(format!(
                            "wall color {id} at ({x}, {y}) missing from palette"
                        )));
                    }
                }
            }
        }
        for d in &map.decor {
            if !matches!(map.cell(d.x, d.y), Some(Cell::Wall(_))) {
                return Err(EnvError::InvalidMap(format!(
                    "decor at ({}, {}) is not on a wall cell",
                    d.x, d.y
                )));
            }
            let (dx, dy) = d.face.delta();
            if map.cell(d.x + dx, d.y + dy) != Some(Cell::Floor) {
                return Err(EnvError::InvalidMap(format!(
                    "decor at ({}, {}) faces {:?} but that neighbour is not floor",
                    d.x, d.y, d.face
                )));
            }
            if !map.palette.contains_key(&d.color) {
                return Err(EnvError::InvalidMap(format!(
                    "decor color {} missing from palette",
                    d.color
                )));
            }
        }
        Ok(map)
    }

    pub fn from_file_repr(file: MapFile) -> Result<Self, EnvError> {
        if file.rows.len() != file.height {
            return Err(EnvError::InvalidMap(format!(
                "height is {} but {} rows given",
                file.height,
                file.rows.len()
            )));
        }
        let mut cells = Vec::with_capacity(file.width * file.height);
        for (y, row) in file.rows.iter().enumerate() {
            if row.chars().count() != file.width {
                return Err(EnvError::InvalidMap(format!(
                    "row {y} has {} cells, expected {}",
                    row.chars().count(),
                    file.width
                )));
            }
            for ch in row.chars() {
                cells.push(match ch {
                    '.' => Cell::Floor,
                    c if c.is_ascii_digit() => Cell::Wall(c as u8 - b'0'),
                    c => {
                        return Err(EnvError::InvalidMap(format!(
                            "unknown cell code {c:?} in row {y}"
                        )))
                    }
                });
            }
        }
        let mut palette = BTreeMap::new();
        for (k, v) in file.palette {
            let id: u8 = k
                .parse()
                .map_err(|_| EnvError::InvalidMap(format!("palette key {k:?} is not a color id")))?;
            palette.insert(id, v);
        }
        Self::new(file.width, file.height, cells, file.decor, palette)
    }

    pub fn to_file_repr(&self) -> MapFile {
        let rows = (0..self.height)
            .map(|y| {
                (0..self.width)
                    .map(|x| match self.cells[y * self.width + x] {
                        Cell::Floor => '.',
                        Cell::Wall(id) => char::from(b'0' + id.min(9)),
                    })
                    .collect()
            })
            .collect();
        MapFile {
            width: self.width,
            height: self.height,
            rows,
            decor: self.decor.clone(),
            palette: self
                .palette
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self, EnvError> {
        let file: MapFile =
            serde_json::from_str(s).map_err(|e| EnvError::InvalidMap(e.to_string()))?;
        Self::from_file_repr(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_repr()).expect("map serializes")
    }

    pub fn load(path: &Path) -> Result<Self, EnvError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(&self.to_file_repr()).expect("map serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn decor(&self) -> &[Decor] {
        &self.decor
    }

    pub fn palette(&self) -> &BTreeMap<u8, [f64; 3]> {
        &self.palette
    }

    pub fn color(&self, id: u8) -> [f64; 3] {
        self.palette.get(&id).copied().unwrap_or([1.0, 0.0, 1.0])
    }

    /// `None` outside the grid.
    pub fn cell(&self, x: i32, y: i32) -> Option<Cell> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return None;
        }
        Some(self.cells[y as usize * self.width + x as usize])
    }

    pub fn is_floor(&self, x: i32, y: i32) -> bool {
        self.cell(x, y) == Some(Cell::Floor)
    }

    pub fn floor_cells(&self) -> Vec<(i32, i32)> {
        let mut out = Vec::new();
        for y in 0..self.height as i32 {
            for x in 0..self.width as i32 {
                if self.is_floor(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Index into [`MazeMap::decor`] of the marker on `(x, y, face)`, if any.
    pub fn decor_at(&self, x: i32, y: i32, face: Dir) -> Option<usize> {
        self.decor
            .iter()
            .position(|d| d.x == x && d.y == y && d.face == face)
    }

    pub(crate) fn palette_mut(&mut self) -> &mut BTreeMap<u8, [f64; 3]> {
        &mut self.palette
    }

    pub(crate) fn remove_decor(&mut self, keep: impl Fn(usize) -> bool) {
        let mut i = 0;
        self.decor.retain(|_| {
            let k = keep(i);
            i += 1;
            k
        });
    }
}
