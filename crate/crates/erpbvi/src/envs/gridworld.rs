//! A slippery grid navigation POMDP.
//!
//! States are grid cells plus one absorbing terminal state. The agent moves
//! in the four cardinal directions; bumping a wall leaves it in place, and a
//! move into a free cell fails (stays put) with probability `p_slip`. Goal
//! cells pay +1 and failure cells -1 before transitioning to the terminal
//! state. The agent observes only the type of the cell it occupies (normal,
//! goal, or failure) and always starts in the bottom-left corner.

use serde::{Deserialize, Serialize};

use crate::envs::ConfigError;
use crate::model::{Belief, Labels, TabularPomdp};

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;

pub const OBS_NORMAL: usize = 0;
pub const OBS_GOAL: usize = 1;
pub const OBS_FAILURE: usize = 2;

/// Which goal layout to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoalVariant {
    /// Goal in the bottom-right corner with a failure-cell wall; the layout
    /// used for robustness runs (short risky path through the gap, longer
    /// safe path over the top).
    BottomRight,
    /// Single goal at the middle of the right wall, no failure cells.
    RightWall,
    /// Single goal at the middle of the top wall, no failure cells.
    TopWall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridWorldParams {
    pub width: usize,
    pub height: usize,
    pub start: (usize, usize),
    pub goal_cells: Vec<(usize, usize)>,
    pub failure_cells: Vec<(usize, usize)>,
    /// Probability that a move into a free cell leaves the agent in place.
    pub p_slip: f64,
    /// When false, failure cells are dropped from the layout.
    pub include_failures: bool,
    pub discount: f64,
}

impl Default for GridWorldParams {
    fn default() -> GridWorldParams {
        GridWorldParams::variant(GoalVariant::BottomRight, 0.0)
    }
}

impl GridWorldParams {
    /// The 6x6 default layouts. `BottomRight` places the goal at (5, 0) with
    /// a failure wall in column 3 spanning rows 1..=4, leaving a gap at row 0
    /// and an open detour along the top row. The inference layouts drop the
    /// failures and place a single goal at a far-wall midpoint.
    pub fn variant(variant: GoalVariant, p_slip: f64) -> GridWorldParams {
        let (goal_cells, failure_cells, include_failures) = match variant {
            GoalVariant::BottomRight => (
                vec![(5, 0)],
                vec![(3, 1), (3, 2), (3, 3), (3, 4)],
                true,
            ),
            GoalVariant::RightWall => (vec![(5, 3)], vec![], false),
            GoalVariant::TopWall => (vec![(3, 5)], vec![], false),
        };
        GridWorldParams {
            width: 6,
            height: 6,
            start: (0, 0),
            goal_cells,
            failure_cells,
            p_slip,
            include_failures,
            discount: 0.95,
        }
    }

    fn in_bounds(&self, cell: (i64, i64)) -> bool {
        cell.0 >= 0 && cell.1 >= 0 && (cell.0 as usize) < self.width && (cell.1 as usize) < self.height
    }

    pub fn cell_index(&self, cell: (usize, usize)) -> usize {
        cell.1 * self.width + cell.0
    }

    pub fn terminal_index(&self) -> usize {
        self.width * self.height
    }

    pub fn n_states(&self) -> usize {
        self.width * self.height + 1
    }

    fn active_failures(&self) -> &[(usize, usize)] {
        if self.include_failures {
            &self.failure_cells
        } else {
            &[]
        }
    }
}

pub fn build_model(params: &GridWorldParams) -> Result<TabularPomdp, ConfigError> {
    if params.width == 0 || params.height == 0 {
        return Err(ConfigError::Invalid("grid must be nonempty".into()));
    }
    if !(0.0..=1.0).contains(&params.p_slip) {
        return Err(ConfigError::Invalid(format!(
            "p_slip must lie in [0, 1], got {}",
            params.p_slip
        )));
    }
    let in_bounds_u =
        |c: (usize, usize)| c.0 < params.width && c.1 < params.height;
    for &c in params.goal_cells.iter().chain(params.active_failures()) {
        if !in_bounds_u(c) {
            return Err(ConfigError::Invalid(format!("cell {c:?} out of bounds")));
        }
    }
    if params.goal_cells.is_empty() {
        return Err(ConfigError::Invalid("at least one goal cell required".into()));
    }
    for &g in &params.goal_cells {
        if params.active_failures().contains(&g) {
            return Err(ConfigError::Invalid(format!(
                "cell {g:?} is both goal and failure"
            )));
        }
    }
    if !in_bounds_u(params.start) {
        return Err(ConfigError::Invalid("start cell out of bounds".into()));
    }
    if params.goal_cells.contains(&params.start)
        || params.active_failures().contains(&params.start)
    {
        return Err(ConfigError::Invalid(
            "start cell must not be a goal or failure cell".into(),
        ));
    }

    let n_states = params.n_states();
    let terminal = params.terminal_index();
    let mut b = TabularPomdp::builder(n_states, 4, 3).discount(params.discount);

    let cell_type = |cell: (usize, usize)| -> usize {
        if params.goal_cells.contains(&cell) {
            OBS_GOAL
        } else if params.active_failures().contains(&cell) {
            OBS_FAILURE
        } else {
            OBS_NORMAL
        }
    };

    for y in 0..params.height {
        for x in 0..params.width {
            let s = params.cell_index((x, y));
            let ty = cell_type((x, y));
            for a in 0..4 {
                if ty == OBS_GOAL {
                    b.set_transition(s, a, terminal, 1.0);
                    b.set_reward(s, a, 1.0);
                    continue;
                }
                if ty == OBS_FAILURE {
                    b.set_transition(s, a, terminal, 1.0);
                    b.set_reward(s, a, -1.0);
                    continue;
                }
                let delta = match a {
                    UP => (0, 1),
                    DOWN => (0, -1),
                    LEFT => (-1, 0),
                    _ => (1, 0),
                };
                let target = (x as i64 + delta.0, y as i64 + delta.1);
                if !params.in_bounds(target) {
                    // Bumping the wall: stay put.
                    b.set_transition(s, a, s, 1.0);
                } else {
                    let t = params.cell_index((target.0 as usize, target.1 as usize));
                    b.add_transition(s, a, t, 1.0 - params.p_slip);
                    b.add_transition(s, a, s, params.p_slip);
                }
            }
        }
    }
    b.make_absorbing(terminal);

    // The agent observes the type of the cell it lands in; the terminal
    // state reads as normal.
    for a in 0..4 {
        for y in 0..params.height {
            for x in 0..params.width {
                let s = params.cell_index((x, y));
                b.set_observation(a, s, cell_type((x, y)), 1.0);
            }
        }
        b.set_observation(a, terminal, OBS_NORMAL, 1.0);
    }

    let mut state_labels: Vec<String> = (0..params.height)
        .flat_map(|y| (0..params.width).map(move |x| format!("cell_{x}_{y}")))
        .collect();
    state_labels.push("terminal".into());
    b = b.labels(Labels {
        states: Some(state_labels),
        actions: Some(vec!["up".into(), "down".into(), "left".into(), "right".into()]),
        observations: Some(vec!["normal".into(), "goal".into(), "failure".into()]),
    });
    Ok(b.build()?)
}

/// The agent always starts, with certainty, in the configured start cell.
pub fn initial_belief(params: &GridWorldParams) -> Belief {
    Belief::point_mass(params.n_states(), params.cell_index(params.start))
}
