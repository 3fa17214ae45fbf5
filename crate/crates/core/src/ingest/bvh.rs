use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    /// Axis index 0..3 (x, y, z).
    pub fn axis(self) -> usize {
        match self {
            Channel::Xposition | Channel::Xrotation => 0,
            Channel::Yposition | Channel::Yrotation => 1,
            Channel::Zposition | Channel::Zrotation => 2,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(
            self,
            Channel::Xrotation | Channel::Yrotation | Channel::Zrotation
        )
    }
}

impl FromStr for Channel {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        // Some exporters vary the capitalisation.
        Ok(match s.to_ascii_lowercase().as_str() {
            "xposition" => Channel::Xposition,
            "yposition" => Channel::Yposition,
            "zposition" => Channel::Zposition,
            "xrotation" => Channel::Xrotation,
            "yrotation" => Channel::Yrotation,
            "zrotation" => Channel::Zrotation,
            _ => return Err(()),
        })
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    pub offset: [f64; 3],
    pub channels: Vec<Channel>,
}

/// Joint hierarchy in depth-first document order. End sites are not joints.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub joints: Vec<Joint>,
}

impl Skeleton {
    pub fn channel_count(&self) -> usize {
        self.joints.iter().map(|j| j.channels.len()).sum()
    }

    pub fn joint_names(&self) -> Vec<String> {
        self.joints.iter().map(|j| j.name.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelData {
    pub frame_count: usize,
    pub frame_time: f64,
    /// Row-major, `frame_count × width`.
    pub values: Vec<f64>,
    pub width: usize,
}

impl ChannelData {
    pub fn row(&self, frame: usize) -> &[f64] {
        &self.values[frame * self.width..(frame + 1) * self.width]
    }
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.items.get(self.pos) {
            Some(&t) => {
                self.pos += 1;
                Ok(t)
            }
            None => Err(Error::syntax(
                self.last_line,
                format!("unexpected end of hierarchy, expected {what}"),
            )),
        }
    }

    fn expect(&mut self, word: &str) -> Result<usize> {
        let (line, tok) = self.next(word)?;
        if tok != word {
            return Err(Error::syntax(
                line,
                format!("expected `{word}`, found `{tok}`"),
            ));
        }
        Ok(line)
    }

    fn number(&mut self) -> Result<f64> {
        let (line, tok) = self.next("a number")?;
        tok.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::syntax(line, format!("expected a number, found `{tok}`")))
    }

    fn count(&mut self) -> Result<usize> {
        let (line, tok) = self.next("a count")?;
        tok.parse::<usize>()
            .map_err(|_| Error::syntax(line, format!("expected a count, found `{tok}`")))
    }
}

/// Parses a BVH document into its skeleton and raw channel table.
pub fn parse_bvh(text: &str) -> Result<(Skeleton, ChannelData)> {
    let lines: Vec<&str> = text.lines().collect();
    let motion_at = lines
        .iter()
        .position(|l| l.trim() == "MOTION")
        .ok_or_else(|| Error::syntax(lines.len().max(1), "missing MOTION section"))?;

    let items = lines[..motion_at]
        .iter()
        .enumerate()
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
        .collect();
    let mut tokens = Tokens {
        items,
        pos: 0,
        last_line: motion_at.max(1),
    };
    tokens.expect("HIERARCHY")?;
    tokens.expect("ROOT")?;
    let mut joints = Vec::new();
    parse_joint(&mut tokens, &mut joints, None)?;
    if let Some(&(line, tok)) = tokens.items.get(tokens.pos) {
        return Err(Error::syntax(
            line,
            format!("unexpected `{tok}` after root joint"),
        ));
    }
    let skeleton = Skeleton { joints };
    let data = parse_motion(&lines, motion_at, skeleton.channel_count())?;
    Ok((skeleton, data))
}

fn parse_joint(
    tokens: &mut Tokens<'_>,
    joints: &mut Vec<Joint>,
    parent: Option<usize>,
) -> Result<()> {
    let (_, name) = tokens.next("a joint name")?;
    tokens.expect("{")?;
    tokens.expect("OFFSET")?;
    let offset = [tokens.number()?, tokens.number()?, tokens.number()?];
    tokens.expect("CHANNELS")?;
    let count = tokens.count()?;
    if count != 3 && count != 6 {
        return Err(Error::ChannelCount {
            joint: name.to_string(),
            count,
        });
    }
    let mut channels = Vec::with_capacity(count);
    for _ in 0..count {
        let (line, tok) = tokens.next("a channel name")?;
        let ch = tok
            .parse::<Channel>()
            .map_err(|_| Error::syntax(line, format!("unknown channel `{tok}`")))?;
        channels.push(ch);
    }
    let index = joints.len();
    joints.push(Joint {
        name: name.to_string(),
        parent,
        offset,
        channels,
    });

    loop {
        let (line, tok) = tokens.next("`}`")?;
        match tok {
            "}" => return Ok(()),
            "JOINT" => parse_joint(tokens, joints, Some(index))?,
            "End" => {
                tokens.expect("Site")?;
                tokens.expect("{")?;
                tokens.expect("OFFSET")?;
                for _ in 0..3 {
                    tokens.number()?;
                }
                tokens.expect("}")?;
            }
            other => {
                return Err(Error::syntax(
                    line,
                    format!("unexpected `{other}` in joint `{name}`"),
                ))
            }
        }
    }
}

fn header_value<'a>(line: &'a str, key: &str, lineno: usize) -> Result<&'a str> {
    line.trim()
        .strip_prefix(key)
        .map(str::trim)
        .ok_or_else(|| Error::syntax(lineno, format!("expected `{key}`")))
}

fn parse_motion(lines: &[&str], motion_at: usize, width: usize) -> Result<ChannelData> {
    let mut rest = lines
        .iter()
        .enumerate()
        .skip(motion_at + 1)
        .filter(|(_, l)| !l.trim().is_empty());

    let (i, frames_line) = rest
        .next()
        .ok_or_else(|| Error::syntax(motion_at + 1, "missing `Frames:` header"))?;
    let v = header_value(frames_line, "Frames:", i + 1)?;
    let frame_count = v
        .parse::<usize>()
        .map_err(|_| Error::syntax(i + 1, format!("invalid frame count `{v}`")))?;

    let (i, time_line) = rest
        .next()
        .ok_or_else(|| Error::syntax(i + 2, "missing `Frame Time:` header"))?;
    let v = header_value(time_line, "Frame Time:", i + 1)?;
    let frame_time = v
        .parse::<f64>()
        .ok()
        .filter(|t| t.is_finite() && *t > 0.0)
        .ok_or_else(|| Error::syntax(i + 1, format!("invalid frame time `{v}`")))?;

    let mut values = Vec::with_capacity(frame_count * width);
    let mut found = 0;
    for (i, line) in rest {
        let start = values.len();
        for tok in line.split_whitespace() {
            let v = tok
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::syntax(i + 1, format!("invalid channel value `{tok}`")))?;
            values.push(v);
        }
        let n = values.len() - start;
        if n != width {
            return Err(Error::RowWidth {
                line: i + 1,
                expected: width,
                found: n,
            });
        }
        found += 1;
    }
    if found != frame_count {
        return Err(Error::FrameCount {
            declared: frame_count,
            found,
        });
    }
    Ok(ChannelData {
        frame_count,
        frame_time,
        values,
        width,
    })
}
