use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::body_model::testbody::{
    L_ANKLE, L_ELBOW, L_HAND, L_KNEE, L_SHOULDER, R_ANKLE, R_ELBOW, R_HAND, R_KNEE, R_SHOULDER,
};

/// The ten marker locations. Hips are deliberately absent: after waist
/// alignment they barely move relative to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MarkerSite {
    #[serde(rename = "l_hand")]
    LeftHand,
    #[serde(rename = "r_hand")]
    RightHand,
    #[serde(rename = "l_elbow")]
    LeftElbow,
    #[serde(rename = "r_elbow")]
    RightElbow,
    #[serde(rename = "l_shoulder")]
    LeftShoulder,
    #[serde(rename = "r_shoulder")]
    RightShoulder,
    #[serde(rename = "l_knee")]
    LeftKnee,
    #[serde(rename = "r_knee")]
    RightKnee,
    #[serde(rename = "l_ankle")]
    LeftAnkle,
    #[serde(rename = "r_ankle")]
    RightAnkle,
}

pub const NUM_SITES: usize = 10;

impl MarkerSite {
    pub const ALL: [MarkerSite; NUM_SITES] = [
        MarkerSite::LeftHand,
        MarkerSite::RightHand,
        MarkerSite::LeftElbow,
        MarkerSite::RightElbow,
        MarkerSite::LeftShoulder,
        MarkerSite::RightShoulder,
        MarkerSite::LeftKnee,
        MarkerSite::RightKnee,
        MarkerSite::LeftAnkle,
        MarkerSite::RightAnkle,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            MarkerSite::LeftHand => "l_hand",
            MarkerSite::RightHand => "r_hand",
            MarkerSite::LeftElbow => "l_elbow",
            MarkerSite::RightElbow => "r_elbow",
            MarkerSite::LeftShoulder => "l_shoulder",
            MarkerSite::RightShoulder => "r_shoulder",
            MarkerSite::LeftKnee => "l_knee",
            MarkerSite::RightKnee => "r_knee",
            MarkerSite::LeftAnkle => "l_ankle",
            MarkerSite::RightAnkle => "r_ankle",
        }
    }

    /// SMPL joint the marker is anchored to.
    pub fn default_joint(self) -> usize {
        match self {
            MarkerSite::LeftHand => L_HAND,
            MarkerSite::RightHand => R_HAND,
            MarkerSite::LeftElbow => L_ELBOW,
            MarkerSite::RightElbow => R_ELBOW,
            MarkerSite::LeftShoulder => L_SHOULDER,
            MarkerSite::RightShoulder => R_SHOULDER,
            MarkerSite::LeftKnee => L_KNEE,
            MarkerSite::RightKnee => R_KNEE,
            MarkerSite::LeftAnkle => L_ANKLE,
            MarkerSite::RightAnkle => R_ANKLE,
        }
    }
}

impl fmt::Display for MarkerSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MarkerSite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MarkerSite::ALL.into_iter().find(|site| site.name() == s).ok_or_else(|| format!("unknown marker site {s:?}"))
    }
}

/// One value per marker site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteMap<T>([T; NUM_SITES]);

impl<T> SiteMap<T> {
    pub fn from_fn(mut f: impl FnMut(MarkerSite) -> T) -> Self {
        SiteMap(MarkerSite::ALL.map(&mut f))
    }

    pub fn try_from_fn<E>(mut f: impl FnMut(MarkerSite) -> Result<T, E>) -> Result<Self, E> {
        let mut out = Vec::with_capacity(NUM_SITES);
        for site in MarkerSite::ALL {
            out.push(f(site)?);
        }
        Ok(SiteMap(out.try_into().unwrap_or_else(|_| unreachable!("exactly ten sites"))))
    }

    pub fn iter(&self) -> impl Iterator<Item = (MarkerSite, &T)> {
        MarkerSite::ALL.into_iter().zip(self.0.iter())
    }

    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.0.iter()
    }

    pub fn map<U>(&self, mut f: impl FnMut(MarkerSite, &T) -> U) -> SiteMap<U> {
        SiteMap::from_fn(|s| f(s, &self.0[s.index()]))
    }
}

impl<T: Clone> SiteMap<T> {
    pub fn splat(value: T) -> Self {
        SiteMap::from_fn(|_| value.clone())
    }
}

impl<T> Index<MarkerSite> for SiteMap<T> {
    type Output = T;

    fn index(&self, site: MarkerSite) -> &T {
        &self.0[site.index()]
    }
}

impl<T> IndexMut<MarkerSite> for SiteMap<T> {
    fn index_mut(&mut self, site: MarkerSite) -> &mut T {
        &mut self.0[site.index()]
    }
}

/// Site to SMPL joint mapping used for binding.
pub fn default_site_joints() -> SiteMap<usize> {
    SiteMap::from_fn(MarkerSite::default_joint)
}
