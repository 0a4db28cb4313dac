//! Static game data: the finite MDP, player types, utilities and the type
//! structure, plus checks of the standing assumptions on the transition kernel.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Two transition entries are considered equal when they differ by less than this.
pub const ROW_EQUALITY_TOL: f64 = 1e-9;

/// Row sums must be within this distance of one.
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("unknown reaction `{0}`")]
    UnknownReaction(String),
    #[error("index {index} out of range for {what} (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("transition table has {got} entries, expected {expected}")]
    TransitionShape { got: usize, expected: usize },
    #[error("utility table has {got} entries, expected {expected}")]
    UtilityShape { got: usize, expected: usize },
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("duplicate identifier `{0}`")]
    Duplicate(String),
    #[error("probability {value} for {what} outside [0, 1]")]
    Probability { what: &'static str, value: f64 },
    #[error("invalid type structure: {0}")]
    TypeStructure(String),
    #[error("non-finite utility at {0}")]
    NonFiniteUtility(String),
}

/// Sender type: the operator is benign or an attacker is present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SenderType {
    Benign,
    Malicious,
}

impl SenderType {
    pub const ALL: [SenderType; 2] = [SenderType::Benign, SenderType::Malicious];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> SenderType {
        match self {
            SenderType::Benign => SenderType::Malicious,
            SenderType::Malicious => SenderType::Benign,
        }
    }
}

/// Receiver type: whether the defender knows about the vulnerability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverType {
    Unaware,
    Aware,
}

impl ReceiverType {
    pub const ALL: [ReceiverType; 2] = [ReceiverType::Unaware, ReceiverType::Aware];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Finite MDP `(X, A, R, P)` with a fixed initial state.
///
/// Identifiers are opaque strings; their position in the declared vectors is
/// the canonical ordering used for every tie-break downstream. The kernel is
/// stored densely as `transition[((x * |A| + a) * |R| + r) * |X| + x']`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpModel {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub reactions: Vec<String>,
    pub transition: Vec<f64>,
    pub initial_state: String,
}

impl MdpModel {
    /// Builds a model from a row function `row(x, a, r) -> P(.|x, a, r)`.
    pub fn from_rows<F>(
        states: &[&str],
        actions: &[&str],
        reactions: &[&str],
        initial_state: &str,
        mut row: F,
    ) -> Result<Self, ModelError>
    where
        F: FnMut(usize, usize, usize) -> Vec<f64>,
    {
        let mut transition = Vec::with_capacity(states.len().pow(2) * actions.len() * reactions.len());
        for x in 0..states.len() {
            for a in 0..actions.len() {
                for r in 0..reactions.len() {
                    let values = row(x, a, r);
                    if values.len() != states.len() {
                        return Err(ModelError::TransitionShape {
                            got: values.len(),
                            expected: states.len(),
                        });
                    }
                    transition.extend(values);
                }
            }
        }
        let model = MdpModel {
            states: states.iter().map(|s| s.to_string()).collect(),
            actions: actions.iter().map(|s| s.to_string()).collect(),
            reactions: reactions.iter().map(|s| s.to_string()).collect(),
            transition,
            initial_state: initial_state.to_string(),
        };
        model.check_shape()?;
        Ok(model)
    }

    /// Structural checks that must hold before any index arithmetic is safe.
    pub fn check_shape(&self) -> Result<(), ModelError> {
        for (what, ids) in [
            ("states", &self.states),
            ("actions", &self.actions),
            ("reactions", &self.reactions),
        ] {
            if ids.is_empty() {
                return Err(ModelError::Empty(what));
            }
            for (i, id) in ids.iter().enumerate() {
                if ids[..i].contains(id) {
                    return Err(ModelError::Duplicate(id.clone()));
                }
            }
        }
        let expected = self.num_states().pow(2) * self.num_actions() * self.num_reactions();
        if self.transition.len() != expected {
            return Err(ModelError::TransitionShape {
                got: self.transition.len(),
                expected,
            });
        }
        self.state_index(&self.initial_state)?;
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn state_index(&self, id: &str) -> Result<usize, ModelError> {
        self.states
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| ModelError::UnknownState(id.to_string()))
    }

    pub fn action_index(&self, id: &str) -> Result<usize, ModelError> {
        self.actions
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| ModelError::UnknownAction(id.to_string()))
    }

    pub fn reaction_index(&self, id: &str) -> Result<usize, ModelError> {
        self.reactions
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| ModelError::UnknownReaction(id.to_string()))
    }

    pub fn initial_index(&self) -> usize {
        // check_shape guarantees presence for validated models
        self.state_index(&self.initial_state).unwrap_or(0)
    }

    /// The distribution `P(.|x, a, r)` as a slice over states.
    ///
    /// Panics if an index is out of range; use [`MdpModel::checked_row`] for
    /// untrusted indices.
    pub fn row(&self, x: usize, a: usize, r: usize) -> &[f64] {
        let n = self.num_states();
        let start = ((x * self.num_actions() + a) * self.num_reactions() + r) * n;
        &self.transition[start..start + n]
    }

    pub fn checked_row(&self, x: usize, a: usize, r: usize) -> Result<&[f64], ModelError> {
        for (what, index, len) in [
            ("state", x, self.num_states()),
            ("action", a, self.num_actions()),
            ("reaction", r, self.num_reactions()),
        ] {
            if index >= len {
                return Err(ModelError::IndexOutOfRange { what, index, len });
            }
        }
        Ok(self.row(x, a, r))
    }

    pub fn prob(&self, next: usize, x: usize, a: usize, r: usize) -> f64 {
        self.row(x, a, r)[next]
    }
}

/// One problem found by [`validate_model`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelViolation {
    Shape { message: String },
    RowSum { state: String, action: String, reaction: String, sum: f64 },
    OutOfRange { next: String, state: String, action: String, reaction: String, value: f64 },
}

/// Report-style validation. An empty vector means the model is valid.
pub fn validate_model(model: &MdpModel) -> Vec<ModelViolation> {
    if let Err(e) = model.check_shape() {
        return vec![ModelViolation::Shape { message: e.to_string() }];
    }
    let mut out = Vec::new();
    for x in 0..model.num_states() {
        for a in 0..model.num_actions() {
            for r in 0..model.num_reactions() {
                let row = model.row(x, a, r);
                for (next, &p) in row.iter().enumerate() {
                    if !(0.0..=1.0).contains(&p) {
                        out.push(ModelViolation::OutOfRange {
                            next: model.states[next].clone(),
                            state: model.states[x].clone(),
                            action: model.actions[a].clone(),
                            reaction: model.reactions[r].clone(),
                            value: p,
                        });
                    }
                }
                let sum: f64 = row.iter().sum();
                if sum.is_nan() || (sum - 1.0).abs() > ROW_SUM_TOL {
                    out.push(ModelViolation::RowSum {
                        state: model.states[x].clone(),
                        action: model.actions[a].clone(),
                        reaction: model.reactions[r].clone(),
                        sum,
                    });
                }
            }
        }
    }
    out
}

fn rows_equal(lhs: &[f64], rhs: &[f64]) -> bool {
    lhs.iter().zip(rhs).all(|(p, q)| (p - q).abs() < ROW_EQUALITY_TOL)
}

/// A pair of actions that are indistinguishable from state `x` under reaction `r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdenticalRows {
    pub state: usize,
    pub reaction: usize,
    pub action: usize,
    pub other_action: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    pub holds: bool,
    pub witnesses: Vec<IdenticalRows>,
}

/// Distinct actions must induce distinct next-state distributions from every
/// state under every reaction.
pub fn actions_identifiable(model: &MdpModel) -> IdentifiabilityReport {
    let mut witnesses = Vec::new();
    for x in 0..model.num_states() {
        for r in 0..model.num_reactions() {
            for a in 0..model.num_actions() {
                for b in (a + 1)..model.num_actions() {
                    if rows_equal(model.row(x, a, r), model.row(x, b, r)) {
                        witnesses.push(IdenticalRows {
                            state: x,
                            reaction: r,
                            action: a,
                            other_action: b,
                        });
                    }
                }
            }
        }
    }
    IdentifiabilityReport {
        holds: witnesses.is_empty(),
        witnesses,
    }
}

fn reactions_equivalent(model: &MdpModel, r: usize, s: usize) -> bool {
    (0..model.num_states()).all(|x| {
        (0..model.num_actions()).all(|a| rows_equal(model.row(x, a, r), model.row(x, a, s)))
    })
}

/// Partitions the reactions into classes that induce identical dynamics.
///
/// Classes are ordered by their smallest member and members keep reaction order.
pub fn reaction_classes(model: &MdpModel) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for r in 0..model.num_reactions() {
        match classes
            .iter_mut()
            .find(|class| reactions_equivalent(model, class[0], r))
        {
            Some(class) => class.push(r),
            None => classes.push(vec![r]),
        }
    }
    classes
}

/// Largest set of reactions that leave the transition kernel unchanged.
/// Ties go to the class whose first reaction comes first.
pub fn reaction_invariant_set(model: &MdpModel) -> Vec<usize> {
    let mut best: Vec<usize> = Vec::new();
    for class in reaction_classes(model) {
        if class.len() > best.len() {
            best = class;
        }
    }
    best
}

/// Instantaneous utilities `U^s(theta, x, a, r)` and `U^r(theta, x, a, r)`,
/// both indexed by the sender type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityTables {
    num_states: usize,
    num_actions: usize,
    num_reactions: usize,
    sender: Vec<f64>,
    receiver: Vec<f64>,
}

impl UtilityTables {
    pub fn from_fns<S, R>(model: &MdpModel, mut sender: S, mut receiver: R) -> Self
    where
        S: FnMut(SenderType, usize, usize, usize) -> f64,
        R: FnMut(SenderType, usize, usize, usize) -> f64,
    {
        let (nx, na, nr) = (model.num_states(), model.num_actions(), model.num_reactions());
        let mut s = Vec::with_capacity(2 * nx * na * nr);
        let mut rv = Vec::with_capacity(2 * nx * na * nr);
        for theta in SenderType::ALL {
            for x in 0..nx {
                for a in 0..na {
                    for r in 0..nr {
                        s.push(sender(theta, x, a, r));
                        rv.push(receiver(theta, x, a, r));
                    }
                }
            }
        }
        UtilityTables {
            num_states: nx,
            num_actions: na,
            num_reactions: nr,
            sender: s,
            receiver: rv,
        }
    }

    fn offset(&self, theta: SenderType, x: usize, a: usize, r: usize) -> usize {
        ((theta.index() * self.num_states + x) * self.num_actions + a) * self.num_reactions + r
    }

    pub fn sender(&self, theta: SenderType, x: usize, a: usize, r: usize) -> f64 {
        self.sender[self.offset(theta, x, a, r)]
    }

    pub fn receiver(&self, theta: SenderType, x: usize, a: usize, r: usize) -> f64 {
        self.receiver[self.offset(theta, x, a, r)]
    }

    /// Checks the table is total over the model's domain and finite.
    pub fn check_against(&self, model: &MdpModel) -> Result<(), ModelError> {
        let expected = 2 * model.num_states() * model.num_actions() * model.num_reactions();
        if (self.num_states, self.num_actions, self.num_reactions)
            != (model.num_states(), model.num_actions(), model.num_reactions())
            || self.sender.len() != expected
            || self.receiver.len() != expected
        {
            return Err(ModelError::UtilityShape {
                got: self.sender.len().min(self.receiver.len()),
                expected,
            });
        }
        if let Some(i) = self
            .sender
            .iter()
            .chain(&self.receiver)
            .position(|u| !u.is_finite())
        {
            return Err(ModelError::NonFiniteUtility(format!("flat index {i}")));
        }
        Ok(())
    }
}

/// Initial beliefs on the opponent type for every own type.
///
/// `receiver_prior[receiver][sender]` is the receiver's prior on the sender
/// type and `sender_prior[sender][receiver]` the sender's prior on the
/// receiver type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeStructure {
    pub receiver_prior: [[f64; 2]; 2],
    pub sender_prior: [[f64; 2]; 2],
}

impl TypeStructure {
    /// Asymmetric recognition: the unaware receiver is sure the sender is
    /// benign, the aware one assigns `alpha` to benign; the benign sender is
    /// sure the receiver is unaware, the malicious one assigns `beta` to unaware.
    pub fn from_alpha_beta(alpha: f64, beta: f64) -> Result<Self, ModelError> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(ModelError::TypeStructure(format!("alpha = {alpha} must lie in [0, 1)")));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(ModelError::TypeStructure(format!("beta = {beta} must lie in [0, 1]")));
        }
        Ok(TypeStructure {
            receiver_prior: [[1.0, 0.0], [alpha, 1.0 - alpha]],
            sender_prior: [[1.0, 0.0], [beta, 1.0 - beta]],
        })
    }

    /// Symmetric recognition with a common prior `prior` on the malicious
    /// sender. The vulnerability is known, so the receiver acts as the aware
    /// type and the malicious sender knows it.
    pub fn common_prior(prior: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&prior) {
            return Err(ModelError::TypeStructure(format!("prior = {prior} must lie in [0, 1]")));
        }
        Ok(TypeStructure {
            receiver_prior: [[1.0, 0.0], [1.0 - prior, prior]],
            sender_prior: [[1.0, 0.0], [0.0, 1.0]],
        })
    }

    pub fn receiver_prior_malicious(&self, receiver: ReceiverType) -> f64 {
        self.receiver_prior[receiver.index()][SenderType::Malicious.index()]
    }

    pub fn sender_prior_aware(&self, sender: SenderType) -> f64 {
        self.sender_prior[sender.index()][ReceiverType::Aware.index()]
    }

    /// Recovers `alpha` (prior of the aware receiver on the benign sender).
    pub fn alpha(&self) -> f64 {
        self.receiver_prior[ReceiverType::Aware.index()][SenderType::Benign.index()]
    }

    /// Recovers `beta` (prior of the malicious sender on the unaware receiver).
    pub fn beta(&self) -> f64 {
        self.sender_prior[SenderType::Malicious.index()][ReceiverType::Unaware.index()]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for row in self.receiver_prior.iter().chain(&self.sender_prior) {
            for &p in row {
                if !(0.0..=1.0).contains(&p) {
                    return Err(ModelError::Probability { what: "type prior", value: p });
                }
            }
            if (row[0] + row[1] - 1.0).abs() > ROW_SUM_TOL {
                return Err(ModelError::TypeStructure(format!(
                    "prior row {row:?} does not sum to 1"
                )));
            }
        }
        Ok(())
    }
}

/// Full history `(x_{0:k}, a_{0:k-1}, r_{0:k-1})` as indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    states: Vec<usize>,
    actions: Vec<usize>,
    reactions: Vec<usize>,
}

impl History {
    pub fn new(initial_state: usize) -> Self {
        History {
            states: vec![initial_state],
            actions: Vec::new(),
            reactions: Vec::new(),
        }
    }

    pub fn push(&mut self, action: usize, reaction: usize, next_state: usize) {
        self.actions.push(action);
        self.reactions.push(reaction);
        self.states.push(next_state);
    }

    pub fn step(&self) -> usize {
        self.actions.len()
    }

    pub fn current_state(&self) -> usize {
        *self.states.last().expect("history always holds the initial state")
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    /// The sender's view `(x_{0:k}, a_{0:k-1})`.
    pub fn sender_view(&self) -> (&[usize], &[usize]) {
        (&self.states, &self.actions)
    }

    /// The receiver's view `(x_{0:k}, r_{0:k-1})`.
    pub fn receiver_view(&self) -> (&[usize], &[usize]) {
        (&self.states, &self.reactions)
    }
}
