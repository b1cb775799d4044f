use std::fmt;

use crate::scalar::Scalar;

use super::EnvError;

/// The four controllable device kinds of a hub, in agent order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceKind {
    Battery,
    Tank,
    Chp,
    Boiler,
}

impl DeviceKind {
    pub const ALL: [DeviceKind; 4] = [
        DeviceKind::Battery,
        DeviceKind::Tank,
        DeviceKind::Chp,
        DeviceKind::Boiler,
    ];

    /// Number of discrete actions: 21 for storages (-1.0..=1.0), 11 for
    /// generators (0.0..=1.0), both on a 0.1 grid.
    pub fn action_count(self) -> usize {
        match self {
            DeviceKind::Battery | DeviceKind::Tank => 21,
            DeviceKind::Chp | DeviceKind::Boiler => 11,
        }
    }

    /// Index of the "do nothing" action.
    pub fn idle_index(self) -> usize {
        match self {
            DeviceKind::Battery | DeviceKind::Tank => 10,
            DeviceKind::Chp | DeviceKind::Boiler => 0,
        }
    }

    pub fn is_storage(self) -> bool {
        matches!(self, DeviceKind::Battery | DeviceKind::Tank)
    }

    pub fn name(self) -> &'static str {
        match self {
            DeviceKind::Battery => "battery",
            DeviceKind::Tank => "tank",
            DeviceKind::Chp => "chp",
            DeviceKind::Boiler => "boiler",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        DeviceKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps an action index to its dispatch fraction. Storage fractions are
/// signed (positive charges), generator fractions are in `[0, 1]`.
pub fn decode_action<S: Scalar>(index: usize, kind: DeviceKind) -> Result<S, EnvError> {
    let n = kind.action_count();
    if index >= n {
        return Err(EnvError::ActionOutOfRange { kind, index, count: n });
    }
    let offset = kind.idle_index() as f64;
    // (i - offset) / 10 is the correctly rounded decimal, e.g. exactly 0.3.
    Ok(S::lit((index as f64 - offset) / 10.0))
}

/// Action indices for the four devices of one hub.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct HubAction {
    pub battery: usize,
    pub tank: usize,
    pub chp: usize,
    pub boiler: usize,
}

impl HubAction {
    pub fn idle() -> Self {
        Self {
            battery: DeviceKind::Battery.idle_index(),
            tank: DeviceKind::Tank.idle_index(),
            chp: 0,
            boiler: 0,
        }
    }

    pub fn get(&self, kind: DeviceKind) -> usize {
        match kind {
            DeviceKind::Battery => self.battery,
            DeviceKind::Tank => self.tank,
            DeviceKind::Chp => self.chp,
            DeviceKind::Boiler => self.boiler,
        }
    }

    pub fn set(&mut self, kind: DeviceKind, index: usize) {
        match kind {
            DeviceKind::Battery => self.battery = index,
            DeviceKind::Tank => self.tank = index,
            DeviceKind::Chp => self.chp = index,
            DeviceKind::Boiler => self.boiler = index,
        }
    }
}

/// Joint action of the whole park, one [`HubAction`] per hub.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointAction(pub Vec<HubAction>);

impl JointAction {
    pub fn idle(hubs: usize) -> Self {
        JointAction(vec![HubAction::idle(); hubs])
    }

    /// Builds a joint action from per-agent indices in agent order
    /// (hub-major, then battery, tank, CHP, boiler).
    pub fn from_agent_indices(indices: &[usize]) -> Result<Self, EnvError> {
        if indices.len() % 4 != 0 {
            return Err(EnvError::ShapeMismatch(format!(
                "{} agent actions is not a multiple of 4",
                indices.len()
            )));
        }
        Ok(JointAction(
            indices
                .chunks(4)
                .map(|c| HubAction {
                    battery: c[0],
                    tank: c[1],
                    chp: c[2],
                    boiler: c[3],
                })
                .collect(),
        ))
    }

    pub fn agent_indices(&self) -> Vec<usize> {
        self.0
            .iter()
            .flat_map(|h| [h.battery, h.tank, h.chp, h.boiler])
            .collect()
    }
}
