use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ProfileError;

const FRAME_SEPARATOR: &str = " > ";
const INDEX_SEPARATOR: &str = ": ";

/// One level of the inlining context: a method and a location index within it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Frame {
    pub method: String,
    pub index: u32,
}

impl Frame {
    pub fn new(method: impl Into<String>, index: u32) -> Self {
        Frame { method: method.into(), index }
    }
}

/// Allocation-site identity: the context chain, outermost frame first.
///
/// Renders as `"Foo.bar(): 10 > Foo.baz(): 4"`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteId {
    frames: Vec<Frame>,
}

impl SiteId {
    pub fn new(frames: Vec<Frame>) -> Result<Self, ProfileError> {
        if frames.is_empty() {
            return Err(ProfileError::BadContext {
                ctx: String::new(),
                reason: "a site needs at least one frame".into(),
            });
        }
        for frame in &frames {
            if frame.method.is_empty() || frame.method.contains(FRAME_SEPARATOR) || frame.method.contains('\n') {
                return Err(ProfileError::BadContext {
                    ctx: frame.method.clone(),
                    reason: "method names must be non-empty and free of ' > '".into(),
                });
            }
        }
        Ok(SiteId { frames })
    }

    /// A single-frame site.
    pub fn single(method: impl Into<String>, index: u32) -> Result<Self, ProfileError> {
        Self::new(vec![Frame::new(method, index)])
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    /// This site as seen through one more level of inlining: `caller` becomes
    /// the outermost frame.
    pub fn inlined_into(&self, caller: Frame) -> Result<Self, ProfileError> {
        let mut frames = Vec::with_capacity(self.frames.len() + 1);
        frames.push(caller);
        frames.extend(self.frames.iter().cloned());
        Self::new(frames)
    }

    pub fn ctx(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, frame) in self.frames.iter().enumerate() {
            if i > 0 {
                f.write_str(FRAME_SEPARATOR)?;
            }
            write!(f, "{}{}{}", frame.method, INDEX_SEPARATOR, frame.index)?;
        }
        Ok(())
    }
}

impl FromStr for SiteId {
    type Err = ProfileError;

    fn from_str(ctx: &str) -> Result<Self, Self::Err> {
        if ctx.is_empty() {
            return Err(ProfileError::BadContext { ctx: ctx.into(), reason: "empty context".into() });
        }
        let frames = ctx
            .split(FRAME_SEPARATOR)
            .map(|part| {
                let (method, index) = part.rsplit_once(INDEX_SEPARATOR).ok_or_else(|| ProfileError::BadContext {
                    ctx: ctx.into(),
                    reason: format!("frame {part:?} lacks a \": <index>\" suffix"),
                })?;
                // reject signs, whitespace and leading zeros so rendering is the exact inverse
                let canonical = !index.is_empty()
                    && index.bytes().all(|b| b.is_ascii_digit())
                    && (index == "0" || !index.starts_with('0'));
                let index = index.parse::<u32>().ok().filter(|_| canonical).ok_or_else(|| {
                    ProfileError::BadContext { ctx: ctx.into(), reason: format!("bad location index {index:?}") }
                })?;
                Ok(Frame::new(method, index))
            })
            .collect::<Result<Vec<_>, ProfileError>>()?;
        SiteId::new(frames)
            .map_err(|_| ProfileError::BadContext { ctx: ctx.into(), reason: "empty method name".into() })
    }
}

impl Serialize for SiteId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SiteId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let ctx = String::deserialize(deserializer)?;
        ctx.parse().map_err(serde::de::Error::custom)
    }
}
