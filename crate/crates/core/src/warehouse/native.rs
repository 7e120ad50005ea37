//! Native record shapes of the simulated back-end repositories.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepoKind {
    Hr,
    Finance,
    Media,
    Docs,
}

impl RepoKind {
    pub const ALL: [RepoKind; 4] = [RepoKind::Hr, RepoKind::Finance, RepoKind::Media, RepoKind::Docs];

    pub fn as_str(self) -> &'static str {
        match self {
            RepoKind::Hr => "hr",
            RepoKind::Finance => "finance",
            RepoKind::Media => "media",
            RepoKind::Docs => "docs",
        }
    }
}

impl fmt::Display for RepoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RepoKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RepoKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown repository kind `{s}`"))
    }
}

/// Staff record of the HR subsystem. A record with `open_vacancy` set is
/// an unfilled position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaffRecord {
    pub full_name: String,
    pub country: String,
    pub company: String,
    pub position: String,
    pub open_vacancy: bool,
}

/// One financial figure, stored under its catalog key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub amount: f64,
    pub period: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaCategory {
    Audio,
    Video,
    StaticImage,
}

impl MediaCategory {
    pub const ALL: [MediaCategory; 3] = [MediaCategory::Audio, MediaCategory::Video, MediaCategory::StaticImage];

    pub fn as_str(self) -> &'static str {
        match self {
            MediaCategory::Audio => "audio",
            MediaCategory::Video => "video",
            MediaCategory::StaticImage => "static_image",
        }
    }
}

impl FromStr for MediaCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MediaCategory::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown media category `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageKind {
    Photo,
    Logo,
    Catalogue,
}

impl ImageKind {
    pub const ALL: [ImageKind; 3] = [ImageKind::Photo, ImageKind::Logo, ImageKind::Catalogue];

    pub fn as_str(self) -> &'static str {
        match self {
            ImageKind::Photo => "photo",
            ImageKind::Logo => "logo",
            ImageKind::Catalogue => "catalogue",
        }
    }
}

impl FromStr for ImageKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ImageKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown image sub-category `{s}`"))
    }
}

/// Media asset; `sub_category` is present exactly for static images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaObject {
    pub category: MediaCategory,
    pub sub_category: Option<ImageKind>,
    pub format: String,
    pub payload: String,
}

/// Address-book entry from document control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactRecord {
    pub name: String,
    pub department: String,
    pub email: String,
    pub phone: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NativeRecord {
    Hr(StaffRecord),
    Finance(LedgerEntry),
    Media(MediaObject),
    Docs(ContactRecord),
}

impl NativeRecord {
    pub fn kind(&self) -> RepoKind {
        match self {
            NativeRecord::Hr(_) => RepoKind::Hr,
            NativeRecord::Finance(_) => RepoKind::Finance,
            NativeRecord::Media(_) => RepoKind::Media,
            NativeRecord::Docs(_) => RepoKind::Docs,
        }
    }
}
