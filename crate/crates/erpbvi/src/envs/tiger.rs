//! The Tiger POMDP: two doors, one tiger, and a noisy listen action.
//!
//! Listening reports the tiger's side correctly with probability `p_correct`.
//! Opening the door with the tiger costs `r_tiger`; opening the other door
//! earns `r_escape`; listening costs `r_listen`. By default opening resets
//! the problem (the tiger is re-placed uniformly and the observation carries
//! no information); with `reset_on_open` disabled, opening instead ends the
//! episode in an absorbing terminal state.

use serde::{Deserialize, Serialize};

use crate::envs::ConfigError;
use crate::model::{Belief, Labels, TabularPomdp};

pub const LISTEN: usize = 0;
pub const OPEN_LEFT: usize = 1;
pub const OPEN_RIGHT: usize = 2;

pub const TIGER_LEFT: usize = 0;
pub const TIGER_RIGHT: usize = 1;

pub const HEAR_LEFT: usize = 0;
pub const HEAR_RIGHT: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TigerParams {
    /// Probability of hearing the tiger on the correct side.
    pub p_correct: f64,
    pub r_tiger: f64,
    pub r_escape: f64,
    pub r_listen: f64,
    pub discount: f64,
    /// Classic semantics: opening re-places the tiger uniformly. When false,
    /// opening moves to an absorbing terminal state instead.
    pub reset_on_open: bool,
}

impl Default for TigerParams {
    fn default() -> TigerParams {
        TigerParams {
            p_correct: 0.85,
            r_tiger: -100.0,
            r_escape: 10.0,
            r_listen: -1.0,
            discount: 0.95,
            reset_on_open: true,
        }
    }
}

pub fn build_model(params: &TigerParams) -> Result<TabularPomdp, ConfigError> {
    if !(0.0..=1.0).contains(&params.p_correct) {
        return Err(ConfigError::Invalid(format!(
            "p_correct must lie in [0, 1], got {}",
            params.p_correct
        )));
    }
    let n_states = if params.reset_on_open { 2 } else { 3 };
    let done = 2;
    let mut b = TabularPomdp::builder(n_states, 3, 2).discount(params.discount);

    for s in [TIGER_LEFT, TIGER_RIGHT] {
        // Listening never moves the tiger.
        b.set_transition(s, LISTEN, s, 1.0);
        for a in [OPEN_LEFT, OPEN_RIGHT] {
            if params.reset_on_open {
                b.set_transition(s, a, TIGER_LEFT, 0.5);
                b.set_transition(s, a, TIGER_RIGHT, 0.5);
            } else {
                b.set_transition(s, a, done, 1.0);
            }
        }
        b.set_reward(s, LISTEN, params.r_listen);
    }
    b.set_reward(TIGER_LEFT, OPEN_LEFT, params.r_tiger);
    b.set_reward(TIGER_LEFT, OPEN_RIGHT, params.r_escape);
    b.set_reward(TIGER_RIGHT, OPEN_LEFT, params.r_escape);
    b.set_reward(TIGER_RIGHT, OPEN_RIGHT, params.r_tiger);

    // Listening reports the correct side with p_correct; opening is
    // uninformative.
    b.set_observation(LISTEN, TIGER_LEFT, HEAR_LEFT, params.p_correct);
    b.set_observation(LISTEN, TIGER_LEFT, HEAR_RIGHT, 1.0 - params.p_correct);
    b.set_observation(LISTEN, TIGER_RIGHT, HEAR_RIGHT, params.p_correct);
    b.set_observation(LISTEN, TIGER_RIGHT, HEAR_LEFT, 1.0 - params.p_correct);
    for a in [OPEN_LEFT, OPEN_RIGHT] {
        for s in [TIGER_LEFT, TIGER_RIGHT] {
            b.set_observation(a, s, HEAR_LEFT, 0.5);
            b.set_observation(a, s, HEAR_RIGHT, 0.5);
        }
    }
    if !params.reset_on_open {
        b.make_absorbing(done);
        for a in 0..3 {
            b.set_observation(a, done, HEAR_LEFT, 0.5);
            b.set_observation(a, done, HEAR_RIGHT, 0.5);
        }
    }

    let mut states = vec!["tiger-left".to_string(), "tiger-right".to_string()];
    if !params.reset_on_open {
        states.push("done".to_string());
    }
    b = b.labels(Labels {
        states: Some(states),
        actions: Some(vec![
            "listen".into(),
            "open-left".into(),
            "open-right".into(),
        ]),
        observations: Some(vec!["hear-left".into(), "hear-right".into()]),
    });
    Ok(b.build()?)
}

/// The agent starts with no information about the tiger's side.
pub fn initial_belief(params: &TigerParams) -> Belief {
    if params.reset_on_open {
        Belief::uniform(2)
    } else {
        Belief::new(vec![0.5, 0.5, 0.0]).expect("valid tiger belief")
    }
}
