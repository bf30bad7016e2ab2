use super::{EnvError, MazeMap};

const TINY_CELL: &str = r#"{
  "width": 3, "height": 3,
  "rows": ["111", "1.1", "121"],
  "decor": [{"x": 1, "y": 0, "face": "south", "color": 5}],
  "palette": {"1": [0.8, 0.2, 0.2], "2": [0.2, 0.3, 0.9], "5": [1.0, 1.0, 1.0]}
}"#;

const ROOM3: &str = r#"{
  "width": 5, "height": 5,
  "rows": ["11111", "4...2", "4...2", "4...2", "33333"],
  "decor": [
    {"x": 2, "y": 0, "face": "south", "color": 5},
    {"x": 4, "y": 2, "face": "west", "color": 6},
    {"x": 0, "y": 1, "face": "east", "color": 7}
  ],
  "palette": {
    "1": [0.8, 0.2, 0.2], "2": [0.2, 0.7, 0.3], "3": [0.2, 0.3, 0.9],
    "4": [0.9, 0.85, 0.3], "5": [1.0, 1.0, 1.0], "6": [0.1, 0.1, 0.1],
    "7": [0.0, 0.9, 0.9]
  }
}"#;

/// Names accepted by [`fixture`].
pub fn fixture_names() -> &'static [&'static str] {
    &["tiny_cell", "room3"]
}

/// Built-in maps:
///
/// * `tiny_cell`: 3x3, a single floor cell (only rotations are collision-free).
/// * `room3`: 5x5 with an open 3x3 interior, one wall color per side and three
///   decor markers.
pub fn fixture(name: &str) -> Result<MazeMap, EnvError> {
    let json = match name {
        "tiny_cell" => TINY_CELL,
        "room3" => ROOM3,
        other => {
            return Err(EnvError::InvalidMap(format!(
                "unknown fixture {other:?} (known: {})",
                fixture_names().join(", ")
            )))
        }
    };
    MazeMap::from_json(json)
}
