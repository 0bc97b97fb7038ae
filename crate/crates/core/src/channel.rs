//! Optical DC gains: direct path, mirror-reflected path and LC-refracted
//! path, aggregated per user.
//!
//! Room-1 users are served by the mirrors (plus the direct path when it is
//! enabled and unobstructed); Room-2 users only through the LC cells. The
//! cell's exponential gain is not folded into `h`; it is reported
//! separately as [`ChannelGain::amp_factor`] because the rate expressions
//! apply it to the detected amplitude.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{
    cos_incidence, cos_irradiance_panel, panel_normal, DeviceOrientation, PanelElement, Room, Scene,
    UserTerminal, Vec3,
};
use crate::photonics::{LcCell, PhotonicsError};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ChannelError {
    #[error(transparent)]
    Photonics(#[from] PhotonicsError),
}

/// LED emission pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedParams {
    /// Semi-angle at half power (rad).
    pub phi_half: f64,
}

impl LedParams {
    pub fn lambertian_order(&self) -> f64 {
        lambertian_order(self.phi_half)
    }
}

impl Default for LedParams {
    fn default() -> Self {
        Self {
            phi_half: 70f64.to_radians(),
        }
    }
}

/// Photodiode front end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdParams {
    /// Physical detector area (m²).
    pub area: f64,
    /// Refractive index of the non-imaging concentrator.
    pub concentrator_index: f64,
    /// Field-of-view half angle (rad).
    pub fov: f64,
    pub filter_gain: f64,
}

impl PdParams {
    pub fn concentrator_gain(&self) -> f64 {
        let s = self.fov.sin();
        self.concentrator_index * self.concentrator_index / (s * s)
    }

    fn accepts(&self, cos_xi: f64) -> bool {
        cos_xi > 0.0 && cos_xi >= self.fov.cos()
    }
}

impl Default for PdParams {
    fn default() -> Self {
        Self {
            area: 1e-4,
            concentrator_index: 1.5,
            fov: 85f64.to_radians(),
            filter_gain: 1.0,
        }
    }
}

/// How the LC transition coefficient is attached to the refracted paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiMode {
    /// ψ evaluated at each element's own receiver-side incidence angle.
    #[default]
    ElementWise,
    /// One ψ for the whole panel, at the incidence angle from the panel
    /// center.
    PanelAggregate,
}

/// The three panel decision variables, shared by every element.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PanelState {
    pub roll: f64,
    pub yaw: f64,
    pub eta_c: f64,
}

impl PanelState {
    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            roll: x[0],
            yaw: x[1],
            eta_c: x[2],
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.roll, self.yaw, self.eta_c]
    }
}

/// Everything needed to turn a scene and a panel state into channel gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub led: LedParams,
    pub pd: PdParams,
    pub cell: LcCell,
    pub rho_ris: f64,
    /// Optical wavelength (m).
    pub wavelength: f64,
    pub psi_mode: PsiMode,
    /// Incidence angle used for the cell's gain coefficient (rad).
    pub amp_angle: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            led: LedParams::default(),
            pd: PdParams::default(),
            cell: LcCell::default(),
            rho_ris: 0.95,
            wavelength: 510e-9,
            psi_mode: PsiMode::default(),
            amp_angle: 0.0,
        }
    }
}

impl ChannelModel {
    /// exp(ΓD) of the LC cells for the given index.
    pub fn amp_factor(&self, eta_c: f64) -> Result<f64, ChannelError> {
        Ok(self.cell.amplification_factor(eta_c, self.amp_angle, self.wavelength)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelGain {
    pub h: f64,
    pub amp_factor: f64,
}

impl ChannelGain {
    /// Gain used for SIC ordering: `h · exp(ΓD)`.
    pub fn effective(&self) -> f64 {
        self.h * self.amp_factor
    }
}

pub fn lambertian_order(phi_half: f64) -> f64 {
    -1.0 / phi_half.cos().log2()
}

/// Direct AP → receiver gain. The AP points straight down.
pub fn los_gain(led: &LedParams, pd: &PdParams, ap: Vec3, user: &UserTerminal) -> f64 {
    let rx = user.receiver();
    let d = (ap - rx).norm();
    let Ok(cos_xi) = cos_incidence(ap, rx, user.orientation) else {
        return 0.0;
    };
    let cos_phi = (ap.z - rx.z) / d;
    if !pd.accepts(cos_xi) || cos_phi <= 0.0 {
        return 0.0;
    }
    let m = led.lambertian_order();
    (m + 1.0) * pd.area / (2.0 * PI * d * d)
        * pd.concentrator_gain()
        * pd.filter_gain
        * cos_phi.powf(m)
        * cos_xi
}

/// Geometry-only part of an AP → element → receiver path. Everything except
/// the steered irradiance cosine is fixed for a frozen drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayGeometry {
    /// Path gain with the steered irradiance cosine left out.
    pub base: f64,
    /// Unit vector from the receiver towards the element.
    pub toward_element: Vec3,
    /// Incidence cosine at the receiver.
    pub cos_rx: f64,
}

impl RelayGeometry {
    /// `None` when the path contributes nothing regardless of steering.
    pub fn new(
        led: &LedParams,
        pd: &PdParams,
        ap: Vec3,
        element: &PanelElement,
        front_normal: Vec3,
        rx: Vec3,
        orientation: DeviceOrientation,
    ) -> Option<Self> {
        let k = element.center;
        let to_ap = ap - k;
        let d1 = to_ap.norm();
        let to_el = k - rx;
        let d2 = to_el.norm();
        if d1 == 0.0 || d2 == 0.0 {
            return None;
        }
        let cos_phi_ap = (ap.z - k.z) / d1;
        let cos_xi_el = to_ap.dot(front_normal) / d1;
        let cos_rx = cos_incidence(k, rx, orientation).ok()?;
        if cos_phi_ap <= 0.0 || cos_xi_el <= 0.0 || !pd.accepts(cos_rx) {
            return None;
        }
        let m = led.lambertian_order();
        let base = (m + 1.0) * pd.area / (2.0 * PI * PI * d1 * d1 * d2 * d2)
            * element.area
            * pd.concentrator_gain()
            * pd.filter_gain
            * cos_phi_ap.powf(m)
            * cos_xi_el
            * cos_rx;
        Some(Self {
            base,
            toward_element: to_el * (1.0 / d2),
            cos_rx,
        })
    }

    /// Gain for a steering direction; elements facing away contribute 0.
    pub fn gain(&self, steer: Vec3) -> f64 {
        let c = self.toward_element.dot(steer);
        if c > 0.0 {
            self.base * c
        } else {
            0.0
        }
    }

    pub fn rx_angle(&self) -> f64 {
        self.cos_rx.clamp(-1.0, 1.0).acos()
    }
}

fn relay_gain(
    element: &PanelElement,
    ap: Vec3,
    front_normal: Vec3,
    user: &UserTerminal,
    yaw: f64,
    roll: f64,
    led: &LedParams,
    pd: &PdParams,
) -> f64 {
    let rx = user.receiver();
    let Some(geo) = RelayGeometry::new(led, pd, ap, element, front_normal, rx, user.orientation) else {
        return 0.0;
    };
    match cos_irradiance_panel(element.center, rx, yaw, roll) {
        Ok(c) if c > 0.0 => geo.base * c,
        _ => 0.0,
    }
}

/// Gain of the path AP → mirror element → Room-1 receiver.
#[allow(clippy::too_many_arguments)]
pub fn mirror_nlos_gain(
    element: &PanelElement,
    ap: Vec3,
    front_normal: Vec3,
    user: &UserTerminal,
    yaw: f64,
    roll: f64,
    led: &LedParams,
    pd: &PdParams,
    rho_ris: f64,
) -> f64 {
    rho_ris * relay_gain(element, ap, front_normal, user, yaw, roll, led, pd)
}

/// Gain of the path AP → LC element → Room-2 receiver, before the
/// transition coefficient is applied.
#[allow(clippy::too_many_arguments)]
pub fn lc_nlos_gain(
    element: &PanelElement,
    ap: Vec3,
    front_normal: Vec3,
    user: &UserTerminal,
    yaw: f64,
    roll: f64,
    led: &LedParams,
    pd: &PdParams,
) -> f64 {
    relay_gain(element, ap, front_normal, user, yaw, roll, led, pd)
}

fn aggregate_psi_angle(scene: &Scene, user: &UserTerminal) -> f64 {
    cos_incidence(scene.panel.center(), user.receiver(), user.orientation)
        .map(|c| c.clamp(0.0, 1.0).acos())
        .unwrap_or(0.0)
}

/// ψ_LC at a receiver-side angle. Angles at or beyond grazing cannot occur
/// inside the field of view; they transmit nothing.
fn psi_at(cell: &LcCell, eta_c: f64, xi: f64) -> Result<f64, ChannelError> {
    if xi >= std::f64::consts::FRAC_PI_2 {
        return Ok(0.0);
    }
    Ok(cell.transition_coefficient(eta_c, xi)?)
}

/// Total gain of one user, summed element by element.
pub fn total_gain(
    scene: &Scene,
    user: &UserTerminal,
    state: &PanelState,
    model: &ChannelModel,
) -> Result<ChannelGain, ChannelError> {
    let normal = scene.panel.front_normal();
    match user.room {
        Room::One => {
            let direct = if scene.los_indicator(user) {
                los_gain(&model.led, &model.pd, scene.ap, user)
            } else {
                0.0
            };
            let reflected: f64 = scene
                .panel
                .mirrors()
                .map(|e| {
                    mirror_nlos_gain(
                        e,
                        scene.ap,
                        normal,
                        user,
                        state.yaw,
                        state.roll,
                        &model.led,
                        &model.pd,
                        model.rho_ris,
                    )
                })
                .sum();
            Ok(ChannelGain {
                h: direct + reflected,
                amp_factor: 1.0,
            })
        }
        Room::Two => {
            let amp_factor = model.amp_factor(state.eta_c)?;
            let rx = user.receiver();
            let shared_angle = aggregate_psi_angle(scene, user);
            let mut h = 0.0;
            for e in scene.panel.lc_cells() {
                let g = lc_nlos_gain(e, scene.ap, normal, user, state.yaw, state.roll, &model.led, &model.pd);
                if g == 0.0 {
                    continue;
                }
                let xi = match model.psi_mode {
                    PsiMode::ElementWise => cos_incidence(e.center, rx, user.orientation)
                        .map(|c| c.clamp(-1.0, 1.0).acos())
                        .unwrap_or(0.0),
                    PsiMode::PanelAggregate => shared_angle,
                };
                h += g * psi_at(&model.cell, state.eta_c, xi)?;
            }
            Ok(ChannelGain { h, amp_factor })
        }
    }
}

/// Gains of every user in scene order.
pub fn total_gains(scene: &Scene, state: &PanelState, model: &ChannelModel) -> Result<Vec<ChannelGain>, ChannelError> {
    scene.users.iter().map(|u| total_gain(scene, u, state, model)).collect()
}

#[derive(Debug, Clone)]
struct UserLinks {
    room: Room,
    direct: f64,
    /// Reflected paths for Room 1, refracted paths for Room 2, with the
    /// receiver-side angle used for ψ.
    paths: Vec<(RelayGeometry, f64)>,
}

/// Precomputed steering-independent link data of a frozen drop. Evaluating a
/// panel state only needs one dot product per path plus the LC optics.
#[derive(Debug, Clone)]
pub struct LinkTable {
    model: ChannelModel,
    users: Vec<UserLinks>,
}

impl LinkTable {
    pub fn new(scene: &Scene, model: &ChannelModel) -> Self {
        let normal = scene.panel.front_normal();
        let users = scene
            .users
            .iter()
            .map(|u| {
                let rx = u.receiver();
                let shared_angle = aggregate_psi_angle(scene, u);
                let (elements, scale): (Vec<&PanelElement>, f64) = match u.room {
                    Room::One => (scene.panel.mirrors().collect(), model.rho_ris),
                    Room::Two => (scene.panel.lc_cells().collect(), 1.0),
                };
                let paths = elements
                    .into_iter()
                    .filter_map(|e| RelayGeometry::new(&model.led, &model.pd, scene.ap, e, normal, rx, u.orientation))
                    .map(|mut g| {
                        g.base *= scale;
                        let xi = match model.psi_mode {
                            PsiMode::ElementWise => g.rx_angle(),
                            PsiMode::PanelAggregate => shared_angle,
                        };
                        (g, xi)
                    })
                    .collect();
                let direct = if u.room == Room::One && scene.los_indicator(u) {
                    los_gain(&model.led, &model.pd, scene.ap, u)
                } else {
                    0.0
                };
                UserLinks {
                    room: u.room,
                    direct,
                    paths,
                }
            })
            .collect();
        Self { model: *model, users }
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn rooms(&self) -> Vec<Room> {
        self.users.iter().map(|u| u.room).collect()
    }

    pub fn gains(&self, state: &PanelState) -> Result<Vec<ChannelGain>, ChannelError> {
        let steer = panel_normal(state.yaw, state.roll);
        let needs_lc = self.users.iter().any(|u| u.room == Room::Two);
        let amp_factor = if needs_lc {
            self.model.amp_factor(state.eta_c)?
        } else {
            1.0
        };
        let cell = &self.model.cell;
        self.users
            .iter()
            .map(|u| match u.room {
                Room::One => Ok(ChannelGain {
                    h: u.direct + u.paths.iter().map(|(g, _)| g.gain(steer)).sum::<f64>(),
                    amp_factor: 1.0,
                }),
                Room::Two => {
                    let mut h = 0.0;
                    for (g, xi) in &u.paths {
                        let v = g.gain(steer);
                        if v > 0.0 {
                            h += v * psi_at(cell, state.eta_c, *xi)?;
                        }
                    }
                    Ok(ChannelGain { h, amp_factor })
                }
            })
            .collect()
    }
}
