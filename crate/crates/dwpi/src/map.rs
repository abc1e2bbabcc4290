//! ASCII grid-map format shared by the three environments.
//!
//! A map document is a set of header lines followed by one text row per grid
//! row. Headers: `env:`, `width:`, `height:`, and (for treasure maps)
//! `treasures: v0,v1,...`. Cell legend: `#` wall, `.` walkable, `A` agent
//! spawn, `B` scripted-companion spawn, `0`-`9` treasure index, `=` road,
//! `g`/`r`/`y` item colors, `c` car spawn (a car standing on a road cell).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ItemColor {
    Green,
    Red,
    Yellow,
}

impl ItemColor {
    pub const ALL: [ItemColor; 3] = [ItemColor::Green, ItemColor::Red, ItemColor::Yellow];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CellKind {
    Walkable,
    Wall,
    Treasure(usize),
    Road,
    Item(ItemColor),
}

impl CellKind {
    pub fn passable(&self) -> bool {
        !matches!(self, CellKind::Wall)
    }
}

/// Parsed and validated grid map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    pub env_id: String,
    pub width: usize,
    pub height: usize,
    cells: Vec<CellKind>,
    pub treasure_values: Vec<f64>,
    pub agent_spawn: (usize, usize),
    pub companion_spawn: Option<(usize, usize)>,
    pub car_spawns: Vec<(usize, usize)>,
}

impl GridMap {
    pub fn cell(&self, row: usize, col: usize) -> CellKind {
        self.cells[row * self.width + col]
    }

    pub fn in_bounds(&self, row: isize, col: isize) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.height && (col as usize) < self.width
    }

    /// Cells an agent can occupy.
    pub fn walkable(&self, row: usize, col: usize) -> bool {
        self.cell(row, col).passable()
    }

    pub fn cell_index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    /// Positions of every treasure cell, paired with its value, in row-major order.
    pub fn treasures(&self) -> Vec<((usize, usize), f64)> {
        let mut out = Vec::new();
        for r in 0..self.height {
            for c in 0..self.width {
                if let CellKind::Treasure(i) = self.cell(r, c) {
                    out.push(((r, c), self.treasure_values[i]));
                }
            }
        }
        out
    }

    /// Positions of fixed item cells, row-major.
    pub fn item_cells(&self) -> Vec<((usize, usize), ItemColor)> {
        let mut out = Vec::new();
        for r in 0..self.height {
            for c in 0..self.width {
                if let CellKind::Item(color) = self.cell(r, c) {
                    out.push(((r, c), color));
                }
            }
        }
        out
    }

    /// BFS distance field from `from` over passable cells. Treasure cells are
    /// enterable but terminal, so they are reached without being expanded.
    pub fn distances_from(&self, from: (usize, usize)) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.cells.len()];
        let mut q = VecDeque::new();
        dist[self.cell_index(from.0, from.1)] = Some(0);
        q.push_back(from);
        while let Some((r, c)) = q.pop_front() {
            let d = dist[self.cell_index(r, c)].unwrap();
            if matches!(self.cell(r, c), CellKind::Treasure(_)) && (r, c) != from {
                continue;
            }
            for (dr, dc) in [(-1i32, 0i32), (1, 0), (0, -1), (0, 1)] {
                let (nr, nc) = (r as i32 + dr, c as i32 + dc);
                if !self.in_bounds(nr as isize, nc as isize) {
                    continue;
                }
                let (nr, nc) = (nr as usize, nc as usize);
                if !self.walkable(nr, nc) || dist[self.cell_index(nr, nc)].is_some() {
                    continue;
                }
                dist[self.cell_index(nr, nc)] = Some(d + 1);
                q.push_back((nr, nc));
            }
        }
        dist
    }
}

/// Parse an ASCII map document and validate its invariants.
pub fn load_map(text: &str) -> Result<GridMap> {
    let mut env_id = String::new();
    let mut width = None;
    let mut height = None;
    let mut treasure_values: Vec<f64> = Vec::new();
    let mut grid_lines: Vec<(usize, &str)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("env:") {
            env_id = rest.trim().to_string();
        } else if let Some(rest) = line.strip_prefix("width:") {
            width = Some(parse_header_usize(rest, lineno)?);
        } else if let Some(rest) = line.strip_prefix("height:") {
            height = Some(parse_header_usize(rest, lineno)?);
        } else if let Some(rest) = line.strip_prefix("treasures:") {
            treasure_values = rest
                .split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|_| Error::MapParse {
                        line: lineno + 1,
                        msg: format!("bad treasure value '{}'", t.trim()),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
        } else {
            grid_lines.push((lineno, line));
        }
    }

    let height = height.unwrap_or(grid_lines.len());
    let width = width.unwrap_or_else(|| grid_lines.iter().map(|(_, l)| l.chars().count()).max().unwrap_or(0));
    if grid_lines.len() != height {
        return Err(Error::MapParse {
            line: 0,
            msg: format!("expected {height} grid rows, found {}", grid_lines.len()),
        });
    }

    let mut cells = vec![CellKind::Wall; width * height];
    let mut agent_spawn = None;
    let mut companion_spawn = None;
    let mut car_spawns = Vec::new();

    for (row, (lineno, line)) in grid_lines.iter().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        if chars.len() != width {
            return Err(Error::MapParse {
                line: lineno + 1,
                msg: format!("row has {} cells, expected {width}", chars.len()),
            });
        }
        for (col, ch) in chars.iter().enumerate() {
            let kind = match ch {
                '#' => CellKind::Wall,
                '.' => CellKind::Walkable,
                'A' => {
                    if agent_spawn.replace((row, col)).is_some() {
                        return Err(Error::MapParse {
                            line: lineno + 1,
                            msg: "duplicate agent spawn".into(),
                        });
                    }
                    CellKind::Walkable
                }
                'B' => {
                    if companion_spawn.replace((row, col)).is_some() {
                        return Err(Error::MapParse {
                            line: lineno + 1,
                            msg: "duplicate companion spawn".into(),
                        });
                    }
                    CellKind::Walkable
                }
                '=' => CellKind::Road,
                'c' => {
                    car_spawns.push((row, col));
                    CellKind::Road
                }
                'g' => CellKind::Item(ItemColor::Green),
                'r' => CellKind::Item(ItemColor::Red),
                'y' => CellKind::Item(ItemColor::Yellow),
                d @ '0'..='9' => {
                    let idx = d.to_digit(10).unwrap() as usize;
                    if idx >= treasure_values.len() {
                        return Err(Error::MapParse {
                            line: lineno + 1,
                            msg: format!("treasure index {idx} has no value in the treasures header"),
                        });
                    }
                    CellKind::Treasure(idx)
                }
                other => {
                    return Err(Error::MapParse {
                        line: lineno + 1,
                        msg: format!("unknown character '{other}'"),
                    });
                }
            };
            cells[row * width + col] = kind;
        }
    }

    let agent_spawn = agent_spawn.ok_or(Error::MissingSpawn)?;
    let map = GridMap {
        env_id,
        width,
        height,
        cells,
        treasure_values,
        agent_spawn,
        companion_spawn,
        car_spawns,
    };

    // Every collectible must be reachable from the agent spawn.
    let dist = map.distances_from(map.agent_spawn);
    for r in 0..map.height {
        for c in 0..map.width {
            let reachable = dist[map.cell_index(r, c)].is_some();
            match map.cell(r, c) {
                CellKind::Treasure(_) | CellKind::Item(_) if !reachable => {
                    return Err(Error::UnreachableCollectible { row: r, col: c });
                }
                _ => {}
            }
        }
    }
    Ok(map)
}

fn parse_header_usize(rest: &str, lineno: usize) -> Result<usize> {
    rest.trim().parse::<usize>().map_err(|_| Error::MapParse {
        line: lineno + 1,
        msg: format!("bad integer '{}'", rest.trim()),
    })
}

/// Built-in default maps.
pub mod defaults {
    pub const CDST: &str = include_str!("../assets/cdst_default.map");
    pub const TRAFFIC: &str = include_str!("../assets/traffic_default.map");
    pub const ITEM_GATHERING: &str = include_str!("../assets/item_default.map");
}
