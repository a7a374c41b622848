//! Line-delimited forum dumps.
//!
//! Each non-blank line is one JSON object tagged by `kind`: a `post` carries
//! an [`EventNarrative`], a `comment` carries its post id, text and vote
//! score. Comments may appear before their post.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use counterframe_core::EventNarrative;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub post_id: String,
    pub text: String,
    #[serde(default)]
    pub vote_score: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DumpRecord {
    Post(EventNarrative),
    Comment(Comment),
}

/// Posts and comments in input order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dump {
    pub posts: Vec<EventNarrative>,
    pub comments: Vec<Comment>,
}

#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate post id {id:?} on line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("{} comment(s) reference unknown posts: {}", ids.len(), ids.join(", "))]
    OrphanComment { ids: Vec<String> },
}

pub fn parse_dump(reader: impl BufRead) -> Result<Dump, DumpError> {
    let mut dump = Dump::default();
    let mut seen = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DumpRecord = serde_json::from_str(&line).map_err(|e| DumpError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        match record {
            DumpRecord::Post(post) => {
                if post.id.is_empty() {
                    return Err(parse_err(line_no, "post id is empty"));
                }
                if post.title.trim().is_empty() {
                    return Err(parse_err(line_no, "post title is empty"));
                }
                if !seen.insert(post.id.clone()) {
                    return Err(DumpError::DuplicateId {
                        id: post.id,
                        line: line_no,
                    });
                }
                dump.posts.push(post);
            }
            DumpRecord::Comment(c) => dump.comments.push(c),
        }
    }
    let orphans: Vec<String> = dump
        .comments
        .iter()
        .filter(|c| !seen.contains(&c.post_id))
        .map(|c| c.id.clone())
        .collect();
    if !orphans.is_empty() {
        return Err(DumpError::OrphanComment { ids: orphans });
    }
    Ok(dump)
}

fn parse_err(line: usize, message: &str) -> DumpError {
    DumpError::Parse {
        line,
        message: message.to_string(),
    }
}

impl Dump {
    /// Comments grouped by post id, each group in input order.
    pub fn threads(&self) -> BTreeMap<&str, Vec<&Comment>> {
        let mut map: BTreeMap<&str, Vec<&Comment>> = BTreeMap::new();
        for c in &self.comments {
            map.entry(c.post_id.as_str()).or_default().push(c);
        }
        map
    }

    /// Reorders comments so each post's thread follows post order. Relative
    /// order within a thread is kept.
    pub fn linked(&self) -> Dump {
        let threads = self.threads();
        let comments = self
            .posts
            .iter()
            .flat_map(|p| threads.get(p.id.as_str()).into_iter().flatten())
            .map(|c| (*c).clone())
            .collect();
        Dump {
            posts: self.posts.clone(),
            comments,
        }
    }

    /// Canonical form: all posts, then all comments, one compact JSON object
    /// per line.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        for p in &self.posts {
            serde_json::to_writer(&mut w, &DumpRecord::Post(p.clone()))?;
            w.write_all(b"\n")?;
        }
        for c in &self.comments {
            serde_json::to_writer(&mut w, &DumpRecord::Comment(c.clone()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}
