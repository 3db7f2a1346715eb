//! Synthetic Stack Exchange sites for integration tests.
//!
//! Users have topical interests, an active period, and a long-tailed activity
//! level; questions draw tags from one topic; answerers are drawn from the
//! users active at the time, weighted by activity and interest in the topic.

#![allow(dead_code)]

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DAY: i64 = 86_400;
/// 2015-01-01T00:00:00Z
pub const EPOCH: i64 = 1_420_070_400;

#[derive(Debug, Clone)]
pub struct SiteSpec {
    pub users: usize,
    pub topics: usize,
    pub tags_per_topic: usize,
    pub questions: usize,
    pub days: i64,
    pub seed: u64,
}

impl Default for SiteSpec {
    fn default() -> Self {
        Self {
            users: 160,
            topics: 12,
            tags_per_topic: 6,
            questions: 1500,
            days: 4 * 365,
            seed: 7,
        }
    }
}

struct User {
    id: u64,
    activity: f64,
    topics: Vec<usize>,
    start: i64,
    end: i64,
}

fn format_date(ts: i64) -> String {
    let dt = chrono::DateTime::from_timestamp(ts, 0).unwrap();
    dt.format("%Y-%m-%dT%H:%M:%S%.3f").to_string()
}

/// Renders a complete `Posts.xml` for the site.
pub fn generate_posts_xml(spec: &SiteSpec) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let span = spec.days * DAY;
    let users: Vec<User> = (0..spec.users)
        .map(|i| {
            let start = EPOCH + (rng.random::<f64>().powi(2) * span as f64 * 0.8) as i64;
            let life = (0.15 + 0.85 * rng.random::<f64>()) * span as f64;
            let n_topics = 1 + rng.random_range(0..2);
            User {
                id: 100 + 3 * i as u64,
                activity: 1.0 / (1.0 + i as f64).powf(0.9),
                topics: (0..n_topics).map(|_| rng.random_range(0..spec.topics)).collect(),
                start,
                end: start + life as i64,
            }
        })
        .collect();
    let tag_name = |topic: usize, k: usize| format!("topic{topic}-tag{k}");

    let mut xml = String::from("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<posts>\n");
    let mut next_id = 1u64;
    for qi in 0..spec.questions {
        let t = EPOCH + (qi as f64 / spec.questions as f64 * span as f64) as i64 + rng.random_range(0..3600);
        let topic = rng.random_range(0..spec.topics);
        let n_tags = 1 + rng.random_range(0..3);
        let mut tags: Vec<String> = Vec::new();
        while tags.len() < n_tags {
            let name = if rng.random::<f64>() < 0.85 {
                tag_name(topic, rng.random_range(0..spec.tags_per_topic))
            } else {
                let other = rng.random_range(0..spec.topics);
                tag_name(other, rng.random_range(0..spec.tags_per_topic))
            };
            if !tags.contains(&name) {
                tags.push(name);
            }
        }

        let weights: Vec<f64> = users
            .iter()
            .map(|u| {
                if t < u.start || t > u.end {
                    0.0
                } else if u.topics.contains(&topic) {
                    u.activity
                } else {
                    u.activity * 0.03
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let question_id = next_id;
        next_id += 1;
        let n_answers = if total > 0.0 { 1 + rng.random_range(0..3) } else { 0 };
        let mut answerers: Vec<usize> = Vec::new();
        for _ in 0..n_answers {
            let mut x = rng.random::<f64>() * total;
            let mut pick = weights.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if x < *w {
                    pick = i;
                    break;
                }
                x -= w;
            }
            if !answerers.contains(&pick) {
                answerers.push(pick);
            }
        }
        let accepted = if !answerers.is_empty() && rng.random::<f64>() < 0.8 {
            Some(0)
        } else {
            None
        };

        let answer_ids: Vec<u64> = answerers
            .iter()
            .map(|_| {
                let id = next_id;
                next_id += 1;
                id
            })
            .collect();
        let tag_attr: String = tags.iter().map(|t| format!("&lt;{t}&gt;")).collect();
        let _ = write!(
            xml,
            "  <row Id=\"{question_id}\" PostTypeId=\"1\" CreationDate=\"{}\" Score=\"{}\" OwnerUserId=\"{}\" Tags=\"{tag_attr}\" AnswerCount=\"{}\"",
            format_date(t),
            rng.random_range(-1..6),
            7 + rng.random_range(0..500),
            answerers.len()
        );
        if let Some(a) = accepted {
            let _ = write!(xml, " AcceptedAnswerId=\"{}\"", answer_ids[a]);
        }
        xml.push_str(" />\n");
        for (k, (&u, &aid)) in answerers.iter().zip(&answer_ids).enumerate() {
            let at = t + (1 + k as i64) * rng.random_range(600..(3 * DAY));
            let score = if accepted == Some(k) {
                1 + rng.random_range(0..8)
            } else {
                rng.random_range(-1..5)
            };
            let _ = writeln!(
                xml,
                "  <row Id=\"{aid}\" PostTypeId=\"2\" ParentId=\"{question_id}\" CreationDate=\"{}\" Score=\"{score}\" OwnerUserId=\"{}\" />",
                format_date(at),
                users[u].id
            );
        }
        if qi % 97 == 0 {
            let _ = writeln!(
                xml,
                "  <row Id=\"{}\" PostTypeId=\"5\" CreationDate=\"{}\" Score=\"0\" />",
                next_id,
                format_date(t)
            );
            next_id += 1;
        }
    }
    xml.push_str("</posts>\n");
    xml
}
