//! Joint game state, speed ratio and the Apollonius disk (the evader's
//! dominant region).

use crate::error::{GameError, Result};
use crate::scalar::Real;
use crate::vector::{Point2, Vector2};

/// Player separation below which the game is considered terminated.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Positions of the pursuer and the evader.
///
/// Fields are public so simulations can carry states through a capture; every
/// operation that needs distinct players validates separation on entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GameState<T> {
    pub pursuer: Point2<T>,
    pub evader: Point2<T>,
}

impl<T: Real> GameState<T> {
    /// Validated constructor: finite coordinates, separation >= 1e-12.
    pub fn new(pursuer: Point2<T>, evader: Point2<T>) -> Result<Self> {
        let state = GameState { pursuer, evader };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.pursuer.is_finite() || !self.evader.is_finite() {
            return Err(GameError::InvalidInput(
                "player positions must be finite".into(),
            ));
        }
        let separation = self.separation();
        if separation < T::lit(DEGENERACY_THRESHOLD) {
            return Err(GameError::DegenerateState {
                separation: separation.as_f64(),
            });
        }
        Ok(())
    }

    #[inline]
    pub fn separation(&self) -> T {
        self.evader.distance(self.pursuer)
    }

    /// State as `[xP, yP, xE, yE]`.
    pub fn to_array(&self) -> [T; 4] {
        [self.pursuer.x, self.pursuer.y, self.evader.x, self.evader.y]
    }

    pub fn from_array(x: [T; 4]) -> Self {
        GameState {
            pursuer: Point2::new(x[0], x[1]),
            evader: Point2::new(x[2], x[3]),
        }
    }
}

/// Evader-to-pursuer speed ratio with the pursuer's absolute speed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedRatio<T> {
    gamma: T,
    pursuer_speed: T,
}

impl<T: Real> SpeedRatio<T> {
    /// Ratio with unit pursuer speed.
    pub fn new(gamma: T) -> Result<Self> {
        Self::with_pursuer_speed(gamma, T::one())
    }

    pub fn with_pursuer_speed(gamma: T, pursuer_speed: T) -> Result<Self> {
        if !(gamma > T::zero() && gamma < T::one()) {
            return Err(GameError::InvalidInput(format!(
                "gamma must lie in (0, 1), got {gamma}"
            )));
        }
        if !(pursuer_speed > T::zero() && pursuer_speed.is_finite()) {
            return Err(GameError::InvalidInput(format!(
                "pursuer speed must be positive, got {pursuer_speed}"
            )));
        }
        Ok(SpeedRatio {
            gamma,
            pursuer_speed,
        })
    }

    #[inline]
    pub fn gamma(&self) -> T {
        self.gamma
    }

    #[inline]
    pub fn pursuer_speed(&self) -> T {
        self.pursuer_speed
    }

    #[inline]
    pub fn evader_speed(&self) -> T {
        self.gamma * self.pursuer_speed
    }
}

/// Which player reaches a point first under straight-line play.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dominance {
    /// Evader arrives no later than the pursuer (boundary included).
    EvaderDominant,
    PursuerDominant,
}

/// Disk of points the evader reaches no later than the pursuer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApolloniusDisk<T> {
    pub center: Point2<T>,
    pub radius: T,
}

impl<T: Real> ApolloniusDisk<T> {
    /// `center = (xE - γ² xP) / (1 - γ²)`, `radius = γ |xE - xP| / (1 - γ²)`.
    pub fn new(state: &GameState<T>, ratio: &SpeedRatio<T>) -> Result<Self> {
        state.validate()?;
        Ok(Self::from_positions(
            state.pursuer,
            state.evader,
            ratio.gamma(),
        ))
    }

    /// Unchecked construction; radius is zero when the players coincide.
    pub(crate) fn from_positions(pursuer: Point2<T>, evader: Point2<T>, gamma: T) -> Self {
        let g2 = gamma * gamma;
        let denom = T::one() - g2;
        ApolloniusDisk {
            center: (evader - pursuer * g2) / denom,
            radius: gamma / denom * evader.distance(pursuer),
        }
    }

    /// The boundary counts as evader dominant, with a relative slack of 1e-12
    /// so that computed boundary points classify consistently.
    pub fn membership(&self, z: Point2<T>) -> Dominance {
        let slack = T::tol(1e-12) * (T::one() + self.radius);
        if (z - self.center).norm() <= self.radius + slack {
            Dominance::EvaderDominant
        } else {
            Dominance::PursuerDominant
        }
    }

    #[inline]
    pub fn contains(&self, z: Point2<T>) -> bool {
        self.membership(z) == Dominance::EvaderDominant
    }

    /// Euclidean projection onto the closed disk.
    pub fn project(&self, z: Point2<T>) -> Point2<T> {
        let d = z - self.center;
        let n = d.norm();
        if n <= self.radius {
            z
        } else {
            self.center + d * (self.radius / n)
        }
    }

    pub fn boundary_point(&self, angle: T) -> Point2<T> {
        self.center + Vector2::from_angle(angle) * self.radius
    }
}

/// Convenience wrapper for [`ApolloniusDisk::new`].
pub fn apollonius_disk<T: Real>(
    state: &GameState<T>,
    ratio: &SpeedRatio<T>,
) -> Result<ApolloniusDisk<T>> {
    ApolloniusDisk::new(state, ratio)
}

/// `|z - xE| - γ |z - xP|`: zero exactly on the equal-arrival circle,
/// negative inside the evader's dominant region.
pub fn verify_meeting_point<T: Real>(
    state: &GameState<T>,
    ratio: &SpeedRatio<T>,
    z: Point2<T>,
) -> T {
    (z - state.evader).norm() - ratio.gamma() * (z - state.pursuer).norm()
}
