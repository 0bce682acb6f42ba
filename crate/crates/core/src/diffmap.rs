//! Unified diff parsing and on-change / outside-change classification.
//!
//! Only the post-image matters: `+` lines become changed lines, pure
//! deletions still count as hunks but contribute no changed lines.

use crate::mutgen::Mutant;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: u32,
    pub old_len: u32,
    pub new_start: u32,
    pub new_len: u32,
    /// Added or modified post-image line numbers.
    pub changed_lines: BTreeSet<u32>,
}

impl Hunk {
    pub fn header(&self) -> String {
        format!(
            "@@ -{},{} +{},{} @@",
            self.old_start, self.old_len, self.new_start, self.new_len
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDiff {
    pub path: String,
    pub hunks: Vec<Hunk>,
}

impl FileDiff {
    pub fn changed_lines(&self) -> BTreeSet<u32> {
        self.hunks
            .iter()
            .flat_map(|h| h.changed_lines.iter().copied())
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitDiff {
    pub files: Vec<FileDiff>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LocationClass {
    OnChange,
    OutsideChange,
}

impl fmt::Display for LocationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LocationClass::OnChange => "on-change",
            LocationClass::OutsideChange => "outside-change",
        })
    }
}

fn components(path: &str) -> Vec<&str> {
    path.split('/').filter(|c| !c.is_empty() && *c != ".").collect()
}

/// Equal paths, or one is a path-component suffix of the other.
fn same_file(a: &str, b: &str) -> bool {
    let (a, b) = (components(a), components(b));
    let n = a.len().min(b.len());
    n > 0 && a[a.len() - n..] == b[b.len() - n..]
}

impl CommitDiff {
    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn file(&self, path: &str) -> Option<&FileDiff> {
        self.files
            .iter()
            .find(|f| f.path == path)
            .or_else(|| self.files.iter().find(|f| same_file(&f.path, path)))
    }

    pub fn changed_lines(&self, path: &str) -> BTreeSet<u32> {
        self.file(path).map(FileDiff::changed_lines).unwrap_or_default()
    }

    pub fn hunk_count(&self) -> usize {
        self.files.iter().map(|f| f.hunks.len()).sum()
    }

    /// Classifies a source line of `path`. A non-empty diff that does not
    /// mention `path` logs a warning and yields `OutsideChange`.
    pub fn classify_line(&self, path: &str, line: u32) -> LocationClass {
        if self.is_empty() {
            return LocationClass::OutsideChange;
        }
        match self.file(path) {
            Some(f) if f.hunks.iter().any(|h| h.changed_lines.contains(&line)) => {
                LocationClass::OnChange
            }
            Some(_) => LocationClass::OutsideChange,
            None => {
                log::warn!("file `{path}` does not appear in the diff; treating as outside-change");
                LocationClass::OutsideChange
            }
        }
    }
}

pub fn hunk_count(diff: &CommitDiff) -> usize {
    diff.hunk_count()
}

/// On-change iff the mutated node's span starts on a changed line.
pub fn classify_mutant(mutant: &Mutant, diff: &CommitDiff) -> LocationClass {
    diff.classify_line(&mutant.file, mutant.span.start_line)
}

fn strip_path(raw: &str) -> Option<String> {
    let raw = raw.split('\t').next().unwrap_or(raw).trim_end();
    if raw == "/dev/null" {
        return None;
    }
    let p = raw
        .strip_prefix("a/")
        .or_else(|| raw.strip_prefix("b/"))
        .unwrap_or(raw);
    Some(p.to_string())
}

fn parse_range(s: &str) -> Option<(u32, u32)> {
    match s.split_once(',') {
        Some((start, len)) => Some((start.parse().ok()?, len.parse().ok()?)),
        None => Some((s.parse().ok()?, 1)),
    }
}

fn parse_header(line: &str) -> Option<(u32, u32, u32, u32)> {
    let rest = line.strip_prefix("@@ ")?;
    let (ranges, _) = rest.split_once(" @@")?;
    let (old, new) = ranges.split_once(' ')?;
    let (os, ol) = parse_range(old.strip_prefix('-')?)?;
    let (ns, nl) = parse_range(new.strip_prefix('+')?)?;
    Some((os, ol, ns, nl))
}

struct OpenHunk {
    hunk: Hunk,
    old_left: u32,
    new_left: u32,
    next_new: u32,
}

/// Parses `git diff`-style unified diff text (any number of context lines).
pub fn parse_unified_diff(text: &str) -> Result<CommitDiff> {
    let malformed = |line: usize, message: String| Error::MalformedDiff { line, message };
    let mut files: Vec<FileDiff> = Vec::new();
    let mut old_path: Option<String> = None;
    let mut current: Option<usize> = None;
    let mut open: Option<OpenHunk> = None;

    let close = |open: &mut Option<OpenHunk>, files: &mut Vec<FileDiff>, current: Option<usize>, lineno: usize| -> Result<()> {
        if let Some(h) = open.take() {
            if h.old_left != 0 || h.new_left != 0 {
                return Err(malformed(
                    lineno,
                    format!("hunk `{}` ends early (inconsistent line counts)", h.hunk.header()),
                ));
            }
            let file = &mut files[current.expect("hunk belongs to a file")];
            if let Some(prev) = file.hunks.last() {
                if h.hunk.new_start < prev.new_start + prev.new_len || h.hunk.old_start < prev.old_start + prev.old_len {
                    return Err(malformed(
                        lineno,
                        format!("hunk `{}` overlaps or precedes `{}`", h.hunk.header(), prev.header()),
                    ));
                }
            }
            file.hunks.push(h.hunk);
        }
        Ok(())
    };

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if let Some(h) = open.as_mut() {
            if h.old_left > 0 || h.new_left > 0 {
                let consumed = match line.as_bytes().first() {
                    Some(b' ') | None => {
                        if h.old_left == 0 || h.new_left == 0 {
                            return Err(malformed(lineno, "context line exceeds hunk counts".into()));
                        }
                        h.old_left -= 1;
                        h.new_left -= 1;
                        h.next_new += 1;
                        true
                    }
                    Some(b'-') => {
                        if h.old_left == 0 {
                            return Err(malformed(lineno, "removed line exceeds hunk counts".into()));
                        }
                        h.old_left -= 1;
                        true
                    }
                    Some(b'+') => {
                        if h.new_left == 0 {
                            return Err(malformed(lineno, "added line exceeds hunk counts".into()));
                        }
                        h.hunk.changed_lines.insert(h.next_new);
                        h.new_left -= 1;
                        h.next_new += 1;
                        true
                    }
                    Some(b'\\') => true,
                    _ => false,
                };
                if consumed {
                    continue;
                }
            } else if line.starts_with('\\') {
                continue;
            }
            close(&mut open, &mut files, current, lineno)?;
        }

        if let Some(rest) = line.strip_prefix("--- ") {
            old_path = strip_path(rest);
        } else if let Some(rest) = line.strip_prefix("+++ ") {
            let path = strip_path(rest)
                .or_else(|| old_path.clone())
                .ok_or_else(|| malformed(lineno, "file header names no path".into()))?;
            current = Some(match files.iter().position(|f| f.path == path) {
                Some(i) => i,
                None => {
                    files.push(FileDiff {
                        path,
                        hunks: Vec::new(),
                    });
                    files.len() - 1
                }
            });
        } else if line.starts_with("@@") {
            let (old_start, old_len, new_start, new_len) =
                parse_header(line).ok_or_else(|| malformed(lineno, format!("bad hunk header `{line}`")))?;
            if current.is_none() {
                return Err(malformed(lineno, "hunk before any `+++` file header".into()));
            }
            open = Some(OpenHunk {
                hunk: Hunk {
                    old_start,
                    old_len,
                    new_start,
                    new_len,
                    changed_lines: BTreeSet::new(),
                },
                old_left: old_len,
                new_left: new_len,
                next_new: new_start,
            });
        } else if line.starts_with('+') || line.starts_with('-') {
            return Err(malformed(lineno, "change line outside of a hunk".into()));
        }
        // other lines (diff --git, index, mode changes) carry nothing we need
    }
    close(&mut open, &mut files, current, text.lines().count() + 1)?;
    Ok(CommitDiff { files })
}
