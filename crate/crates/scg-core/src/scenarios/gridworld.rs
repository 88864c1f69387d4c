//! Gridworld navigation game.
//!
//! A blue agent walks from its start cell to one of two goal squares with
//! the fewest steps; yellow and red barrier agents occupy one cell each from
//! their candidate sets and always earn zero. The blue agent observes both
//! barrier positions and picks a goal; its utility is the negated BFS path
//! length (any strictly decreasing transform gives the same equilibria).
//! Repositioning the red barrier to block the short route shifts every
//! equilibrium from the lower goal to the top-right goal, which is the
//! pre-policy story this scenario exists to exercise.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::graph::{Dag, Domain, Variable};
use crate::model::{ConditionalTable, OutcomeSpec, Scg};

/// Grid cell as (x, y); x grows to the right, y grows upward.
pub type Cell = (usize, usize);

fn cell_label(cell: Cell) -> String {
    format!("{},{}", cell.0, cell.1)
}

/// Parses a `"x,y"` label back into a cell.
pub fn parse_cell(label: &str) -> Option<Cell> {
    let (x, y) = label.split_once(',')?;
    Some((x.trim().parse().ok()?, y.trim().parse().ok()?))
}

/// Layout of the gridworld scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridworldConfig {
    pub width: usize,
    pub height: usize,
    pub blue_start: Cell,
    /// `[top-right goal, lower goal]`.
    pub goals: [Cell; 2],
    pub yellow_positions: Vec<Cell>,
    /// Candidate red cells; the first is the default position.
    pub red_positions: Vec<Cell>,
    pub walls: BTreeSet<Cell>,
}

impl Default for GridworldConfig {
    /// The frozen 7x7 layout.
    ///
    /// A wall row at y = 1 leaves a single door at (3, 1), so the lower goal
    /// at (3, 0) is three steps from the start while the top-right goal is
    /// six. Parking the red barrier in the door makes the lower goal
    /// unreachable and flips the equilibrium route.
    fn default() -> Self {
        GridworldConfig {
            width: 7,
            height: 7,
            blue_start: (3, 3),
            goals: [(6, 6), (3, 0)],
            yellow_positions: vec![(0, 5), (1, 5)],
            red_positions: vec![(6, 0), (5, 2), (3, 1), (1, 3)],
            walls: [(0, 1), (1, 1), (2, 1), (4, 1), (5, 1), (6, 1)].into(),
        }
    }
}

impl GridworldConfig {
    pub fn default_red(&self) -> Cell {
        self.red_positions[0]
    }

    fn in_bounds(&self, cell: Cell) -> bool {
        cell.0 < self.width && cell.1 < self.height
    }

    /// Utility assigned when a goal is unreachable; strictly worse than any
    /// possible path.
    pub fn unreachable_penalty(&self) -> usize {
        self.width * self.height
    }
}

/// Exact 4-neighbor BFS distance from `start` to `goal`, avoiding walls and
/// barrier cells. `None` when unreachable.
pub fn shortest_path(
    config: &GridworldConfig,
    barriers: &BTreeSet<Cell>,
    start: Cell,
    goal: Cell,
) -> Option<usize> {
    let blocked =
        |cell: Cell| config.walls.contains(&cell) || (barriers.contains(&cell) && cell != start);
    if !config.in_bounds(start) || !config.in_bounds(goal) || blocked(goal) {
        return None;
    }
    let mut dist = vec![usize::MAX; config.width * config.height];
    let at = |cell: Cell| cell.1 * config.width + cell.0;
    let mut queue = VecDeque::new();
    dist[at(start)] = 0;
    queue.push_back(start);
    while let Some(cell) = queue.pop_front() {
        if cell == goal {
            return Some(dist[at(cell)]);
        }
        let (x, y) = (cell.0 as isize, cell.1 as isize);
        for (nx, ny) in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
            if nx < 0 || ny < 0 {
                continue;
            }
            let next = (nx as usize, ny as usize);
            if !config.in_bounds(next) || blocked(next) || dist[at(next)] != usize::MAX {
                continue;
            }
            dist[at(next)] = dist[at(cell)] + 1;
            queue.push_back(next);
        }
    }
    None
}

/// Goal selection and realized path length of one play.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridworldOutcome {
    /// 0 = top-right goal, 1 = lower goal.
    pub chosen_goal: usize,
    /// BFS length, or `None` when the chosen goal was unreachable.
    pub path_length: Option<usize>,
}

/// Outcome of choosing `goal` with the given barrier placement.
pub fn play(config: &GridworldConfig, goal: usize, yellow: Cell, red: Cell) -> GridworldOutcome {
    let barriers: BTreeSet<Cell> = [yellow, red].into();
    GridworldOutcome {
        chosen_goal: goal,
        path_length: shortest_path(config, &barriers, config.blue_start, config.goals[goal]),
    }
}

fn goal_distance(config: &GridworldConfig, goal: usize, yellow: Cell, red: Cell) -> f64 {
    match play(config, goal, yellow, red).path_length {
        Some(d) => d as f64,
        None => config.unreachable_penalty() as f64,
    }
}

/// Checks the layout supports both equilibrium regimes: with the default
/// red position the lower goal is strictly closer for every yellow cell,
/// and some red candidate makes the top-right goal strictly closer for
/// every yellow cell.
fn check_layout(config: &GridworldConfig) -> Result<(), ScenarioError> {
    let mut cells = vec![config.blue_start, config.goals[0], config.goals[1]];
    cells.extend(&config.yellow_positions);
    cells.extend(&config.red_positions);
    for cell in cells {
        if !config.in_bounds(cell) {
            return Err(ScenarioError::LayoutInvalid(format!(
                "cell {} out of bounds",
                cell_label(cell)
            )));
        }
        if config.walls.contains(&cell) {
            return Err(ScenarioError::LayoutInvalid(format!(
                "cell {} collides with a wall",
                cell_label(cell)
            )));
        }
    }
    if config.goals[0] == config.goals[1] {
        return Err(ScenarioError::LayoutInvalid("goals coincide".into()));
    }
    if config.yellow_positions.is_empty() || config.red_positions.is_empty() {
        return Err(ScenarioError::LayoutInvalid(
            "barrier candidate sets must be nonempty".into(),
        ));
    }
    let lower_wins = |red: Cell| {
        config
            .yellow_positions
            .iter()
            .all(|&y| goal_distance(config, 1, y, red) < goal_distance(config, 0, y, red))
    };
    let topright_wins = |red: Cell| {
        config
            .yellow_positions
            .iter()
            .all(|&y| goal_distance(config, 0, y, red) < goal_distance(config, 1, y, red))
    };
    if !lower_wins(config.default_red()) {
        return Err(ScenarioError::LayoutInvalid(
            "default red position does not leave the lower goal strictly closer".into(),
        ));
    }
    if !config.red_positions.iter().any(|&r| topright_wins(r)) {
        return Err(ScenarioError::LayoutInvalid(
            "no red candidate blocks the lower route".into(),
        ));
    }
    Ok(())
}

/// First red candidate that makes the top-right goal strictly closer for
/// every yellow placement.
pub fn blocking_red(config: &GridworldConfig) -> Option<Cell> {
    config.red_positions.iter().copied().find(|&r| {
        config
            .yellow_positions
            .iter()
            .all(|&y| goal_distance(config, 0, y, r) < goal_distance(config, 1, y, r))
    })
}

/// Builds the gridworld game.
///
/// Yellow and red pick a cell from their candidate sets (constant zero
/// utility); blue observes both and picks a goal; `Y` records the chosen
/// goal; blue's utility is the negated path length, with unreachable goals
/// penalized below every real path. The designated outcome is
/// `Y = topright`.
pub fn gridworld_scg(config: &GridworldConfig) -> Result<Scg, ScenarioError> {
    check_layout(config)?;
    let yellow_labels: Vec<String> = config
        .yellow_positions
        .iter()
        .map(|&c| cell_label(c))
        .collect();
    let red_labels: Vec<String> = config
        .red_positions
        .iter()
        .map(|&c| cell_label(c))
        .collect();
    let goal_labels = ["topright", "lower"];

    // Blue utility values per (yellow, red, goal) context, plus the domain.
    let mut blue_rows_values = Vec::new();
    for &y in &config.yellow_positions {
        for &r in &config.red_positions {
            for goal in 0..2 {
                blue_rows_values.push(-goal_distance(config, goal, y, r));
            }
        }
    }
    let mut blue_domain: Vec<f64> = blue_rows_values.clone();
    blue_domain.sort_by(f64::total_cmp);
    blue_domain.dedup();

    let dag = Dag::new(
        vec![
            Variable::decision("yellow_pos", Domain::labels(yellow_labels), "yellow"),
            Variable::decision("red_pos", Domain::labels(red_labels), "red"),
            Variable::decision("blue_goal", Domain::labels(goal_labels), "blue"),
            Variable::chance("Y", Domain::labels(goal_labels)),
            Variable::utility("U_blue", blue_domain.iter().copied(), "blue"),
            Variable::utility("U_yellow", [0.0], "yellow"),
            Variable::utility("U_red", [0.0], "red"),
        ],
        &[
            ("yellow_pos".into(), "blue_goal".into()),
            ("red_pos".into(), "blue_goal".into()),
            ("blue_goal".into(), "Y".into()),
            ("yellow_pos".into(), "U_blue".into()),
            ("red_pos".into(), "U_blue".into()),
            ("blue_goal".into(), "U_blue".into()),
        ],
    )
    .map_err(crate::error::ModelError::from)?;

    // U_blue contexts iterate (yellow, red, goal), goal fastest; same loop
    // order as blue_rows_values above.
    let u_blue_rows: Vec<Vec<f64>> = blue_rows_values
        .iter()
        .map(|v| {
            let at = blue_domain.iter().position(|d| d == v).unwrap();
            let mut row = vec![0.0; blue_domain.len()];
            row[at] = 1.0;
            row
        })
        .collect();
    let y_rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];

    Scg::new(
        dag,
        vec!["blue".into(), "red".into(), "yellow".into()],
        vec![
            ConditionalTable {
                variable: "Y".into(),
                rows: y_rows,
            },
            ConditionalTable {
                variable: "U_blue".into(),
                rows: u_blue_rows,
            },
            ConditionalTable {
                variable: "U_yellow".into(),
                rows: vec![vec![1.0]],
            },
            ConditionalTable {
                variable: "U_red".into(),
                rows: vec![vec![1.0]],
            },
        ],
        Some(OutcomeSpec::new("Y", "topright")),
    )
    .map_err(|e| ScenarioError::LayoutInvalid(e.to_string()))
}

/// ASCII rendering: `#` wall, `B` blue start, `G` goal, `Y`/`R` barriers,
/// `.` free. Rows print top to bottom.
pub fn ascii_map(config: &GridworldConfig, yellow: Option<Cell>, red: Option<Cell>) -> String {
    let mut out = String::new();
    for row in (0..config.height).rev() {
        for col in 0..config.width {
            let cell = (col, row);
            let glyph = if Some(cell) == yellow {
                'Y'
            } else if Some(cell) == red {
                'R'
            } else if config.walls.contains(&cell) {
                '#'
            } else if cell == config.blue_start {
                'B'
            } else if config.goals.contains(&cell) {
                'G'
            } else {
                '.'
            };
            out.push(glyph);
        }
        out.push('\n');
    }
    out
}
