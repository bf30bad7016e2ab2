use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Cell, Dir, MazeMap, Pose};
use crate::frame::Frame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    pub fov_degrees: f64,
    pub ceiling: [f64; 3],
    pub floor: [f64; 3],
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            fov_degrees: 60.0,
            ceiling: [0.32, 0.34, 0.40],
            floor: [0.22, 0.18, 0.14],
        }
    }
}

/// Decor markers that contributed at least one pixel to a rendered frame,
/// as indices into [`MazeMap::decor`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Visibility {
    pub decor: BTreeSet<usize>,
}

/// Distance attenuation applied to wall and decor colors.
pub fn shade(distance: f64) -> f64 {
    1.0 / (1.0 + 0.25 * distance)
}

/// Fraction of the wall face (in both directions) covered by a decor marker.
const DECOR_LO: f64 = 0.25;
const DECOR_HI: f64 = 0.75;

pub fn render(map: &MazeMap, pose: &Pose, cfg: &RenderConfig) -> Frame {
    render_with_visibility(map, pose, cfg).0
}

struct Hit {
    distance: f64,
    cell: (i32, i32),
    color: u8,
    face: Dir,
    along: f64,
}

/// Grid traversal of a single ray from the pose's cell center.
fn cast(map: &MazeMap, ox: f64, oy: f64, rx: f64, ry: f64) -> Option<Hit> {
    let mut mx = ox.floor() as i32;
    let mut my = oy.floor() as i32;
    let delta_x = if rx == 0.0 { f64::INFINITY } else { (1.0 / rx).abs() };
    let delta_y = if ry == 0.0 { f64::INFINITY } else { (1.0 / ry).abs() };
    let (step_x, mut side_x) = if rx < 0.0 {
        (-1, (ox - mx as f64) * delta_x)
    } else {
        (1, (mx as f64 + 1.0 - ox) * delta_x)
    };
    let (step_y, mut side_y) = if ry < 0.0 {
        (-1, (oy - my as f64) * delta_y)
    } else {
        (1, (my as f64 + 1.0 - oy) * delta_y)
    };
    let limit = 4 * (map.width() + map.height());
    for _ in 0..limit {
        let x_side = side_x < side_y;
        if x_side {
            side_x += delta_x;
            mx += step_x;
        } else {
            side_y += delta_y;
            my += step_y;
        }
        match map.cell(mx, my) {
            Some(Cell::Floor) => continue,
            Some(Cell::Wall(color)) => {
                let (distance, along, face) = if x_side {
                    let d = side_x - delta_x;
                    let face = if step_x > 0 { Dir::West } else { Dir::East };
                    (d, oy + d * ry, face)
                } else {
                    let d = side_y - delta_y;
                    let face = if step_y > 0 { Dir::North } else { Dir::South };
                    (d, ox + d * rx, face)
                };
                return Some(Hit {
                    distance,
                    cell: (mx, my),
                    color,
                    face,
                    along: along - along.floor(),
                });
            }
            None => return None,
        }
    }
    None
}

/// Renders one frame and reports which decor markers are on screen.
///
/// One ray per column over the horizontal field of view; wall slices have
/// height `H / distance` clamped to `H`, where `distance` is the
/// perpendicular (fisheye-corrected) distance to the wall face.
pub fn render_with_visibility(map: &MazeMap, pose: &Pose, cfg: &RenderConfig) -> (Frame, Visibility) {
    let (w, h) = (cfg.width, cfg.height);
    let mut frame = Frame::new(h, w);
    let mut vis = Visibility::default();
    let theta = pose.angle();
    let (dir_x, dir_y) = (theta.cos(), theta.sin());
    let half_plane = (cfg.fov_degrees.to_radians() / 2.0).tan();
    // Camera plane points to the viewer's right.
    let (plane_x, plane_y) = (-dir_y * half_plane, dir_x * half_plane);
    let (ox, oy) = (pose.x as f64 + 0.5, pose.y as f64 + 0.5);
    let hf = h as f64;

    for col in 0..w {
        let camera_x = 2.0 * col as f64 / w as f64 - 1.0;
        let rx = dir_x + plane_x * camera_x;
        let ry = dir_y + plane_y * camera_x;
        let hit = cast(map, ox, oy, rx, ry);
        for row in 0..h {
            let y = row as f64 + 0.5 - hf / 2.0;
            let rgb = match &hit {
                Some(hit) => {
                    let dist = hit.distance.max(1e-9);
                    let full = hf / dist;
                    let slice = full.min(hf);
                    if y.abs() < slice / 2.0 {
                        let s = shade(dist);
                        let v = (y + full / 2.0) / full;
                        let decor = map.decor_at(hit.cell.0, hit.cell.1, hit.face).filter(|_| {
                            (DECOR_LO..DECOR_HI).contains(&hit.along)
                                && (DECOR_LO..DECOR_HI).contains(&v)
                        });
                        let base = match decor {
                            Some(i) => {
                                vis.decor.insert(i);
                                map.color(map.decor()[i].color)
                            }
                            None => map.color(hit.color),
                        };
                        [base[0] * s, base[1] * s, base[2] * s]
                    } else if y < 0.0 {
                        cfg.ceiling
                    } else {
                        cfg.floor
                    }
                }
                None if y < 0.0 => cfg.ceiling,
                None => cfg.floor,
            };
            frame.set_pixel(row, col, rgb);
        }
    }
    (frame, vis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::fixture;

    #[test]
    fn render_is_deterministic() {
        let map = fixture("room3").unwrap();
        let cfg = RenderConfig::default();
        for h in 0..24 {
            let p = Pose::new(2, 2, h);
            let a = render(&map, &p, &cfg);
            let b = render(&map, &p, &cfg);
            assert_eq!(a.to_ppm(), b.to_ppm());
            assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn center_column_of_adjacent_wall() {
        // Single floor cell, no decor; facing north the wall face is half a
        // cell from the camera, so the slice is 64/0.5 = 128 clamped to 64.
        let map = MazeMap::from_json(
            r#"{"width":3,"height":3,"rows":["121","1.1","111"],
                "palette":{"1":[0.5,0.5,0.5],"2":[0.9,0.3,0.1]}}"#,
        )
        .unwrap();
        let cfg = RenderConfig::default();
        let f = render(&map, &Pose::new(1, 1, 18), &cfg);
        let s = 1.0 / (1.0 + 0.25 * 0.5);
        let expected = [0.9 * s, 0.3 * s, 0.1 * s];
        for row in 0..64 {
            let px = f.pixel(row, 32);
            for c in 0..3 {
                assert!((px[c] - expected[c]).abs() < 1e-12, "row {row}: {px:?}");
            }
        }
    }

    #[test]
    fn far_wall_slice_height() {
        // Corridor facing east from x=1: the wall face at x=4 is 2.5 away.
        let map = MazeMap::from_json(
            r#"{"width":5,"height":3,"rows":["11111","1...1","11111"],
                "palette":{"1":[0.5,0.5,0.5]}}"#,
        )
        .unwrap();
        let cfg = RenderConfig::default();
        let f = render(&map, &Pose::new(1, 1, 0), &cfg);
        let wall_rows = (0..64)
            .filter(|&r| f.pixel(r, 32) != cfg.ceiling && f.pixel(r, 32) != cfg.floor)
            .count();
        // 64 / 2.5 = 25.6 -> rows whose centers fall within +-12.8 of the middle.
        assert_eq!(wall_rows, 26);
        let s = 1.0 / (1.0 + 0.25 * 2.5);
        assert!((f.pixel(32, 32)[0] - 0.5 * s).abs() < 1e-12);
    }
}
