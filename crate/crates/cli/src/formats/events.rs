//! Event files.
//!
//! One event per line: `label weight n_hits` followed by `n_hits` tuples
//! `dom_id:q_first:q_total:t_first`, space separated. `label` is `signal` or
//! `background`, `weight` is in events per year.
//!
//! The truth sidecar (`<events>.truth`) has one line per event:
//! `x y z dx dy dz energy multiplicity` for the track anchor, direction,
//! energy and number of muons.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use icegraph_core::{Event, Hit, Label, Track};

use super::{parse_f64, parse_u32, parse_usize, read_text, write_text};
use crate::error::{CliError, CliResult};

pub fn truth_path(events: &Path) -> PathBuf {
    let mut p = events.as_os_str().to_owned();
    p.push(".truth");
    PathBuf::from(p)
}

pub fn label_name(label: Label) -> &'static str {
    match label {
        Label::Signal => "signal",
        Label::Background => "background",
    }
}

pub fn render_events(events: &[Event]) -> (String, String) {
    let mut ev = String::new();
    let mut truth = String::new();
    for e in events {
        let _ = write!(ev, "{} {} {}", label_name(e.label), e.weight, e.hits.len());
        for h in &e.hits {
            let _ = write!(ev, " {}:{}:{}:{}", h.dom_id, h.q_first, h.q_total, h.t_first);
        }
        ev.push('\n');
        let t = &e.truth;
        let _ = writeln!(
            truth,
            "{} {} {} {} {} {} {} {}",
            t.anchor[0], t.anchor[1], t.anchor[2], t.direction[0], t.direction[1], t.direction[2], t.energy, e.multiplicity
        );
    }
    (ev, truth)
}

fn parse_event_line(path: &Path, n: usize, line: &str) -> CliResult<Event> {
    let mut fields = line.split_ascii_whitespace();
    let mut next = |what: &str| fields.next().ok_or_else(|| CliError::parse(path, n, format!("missing {what}")));
    let label = match next("label")? {
        "signal" => Label::Signal,
        "background" => Label::Background,
        other => return Err(CliError::parse(path, n, format!("unknown label `{other}`"))),
    };
    let weight = parse_f64(path, n, "weight", next("weight")?)?;
    let n_hits = parse_usize(path, n, "n_hits", next("n_hits")?)?;
    let mut hits = Vec::with_capacity(n_hits);
    for k in 0..n_hits {
        let tuple = next("hit")?;
        let parts: Vec<&str> = tuple.split(':').collect();
        if parts.len() != 4 {
            return Err(CliError::parse(path, n, format!("hit {k}: expected dom_id:q_first:q_total:t_first")));
        }
        hits.push(Hit {
            dom_id: parse_u32(path, n, "dom_id", parts[0])?,
            q_first: parse_f64(path, n, "q_first", parts[1])?,
            q_total: parse_f64(path, n, "q_total", parts[2])?,
            t_first: parse_f64(path, n, "t_first", parts[3])?,
        });
    }
    if fields.next().is_some() {
        return Err(CliError::parse(path, n, format!("more than {n_hits} hits")));
    }
    let event = Event {
        hits,
        weight,
        label,
        truth: Track {
            anchor: [0.0; 3],
            direction: [0.0, 0.0, -1.0],
            energy: 1.0,
        },
        multiplicity: 1,
    };
    event
        .validate()
        .map_err(|e| CliError::parse(path, n, e.to_string()))?;
    Ok(event)
}

fn parse_truth_line(path: &Path, n: usize, line: &str) -> CliResult<(Track, u32)> {
    let f: Vec<&str> = line.split_ascii_whitespace().collect();
    if f.len() != 8 {
        return Err(CliError::parse(path, n, format!("expected 8 fields, found {}", f.len())));
    }
    let v = |i: usize, name: &str| parse_f64(path, n, name, f[i]);
    let track = Track {
        anchor: [v(0, "x")?, v(1, "y")?, v(2, "z")?],
        direction: [v(3, "dx")?, v(4, "dy")?, v(5, "dz")?],
        energy: v(6, "energy")?,
    };
    if !track.is_valid() {
        return Err(CliError::parse(path, n, "invalid track"));
    }
    Ok((track, parse_u32(path, n, "multiplicity", f[7])?))
}

pub fn parse_events(path: &Path, events_text: &str, truth_text: &str) -> CliResult<Vec<Event>> {
    let mut events = Vec::new();
    for (i, line) in events_text.lines().enumerate() {
        if !line.trim().is_empty() {
            events.push(parse_event_line(path, i + 1, line)?);
        }
    }
    let tpath = truth_path(path);
    let truths: Vec<(usize, &str)> = truth_text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    if truths.len() != events.len() {
        return Err(CliError::parse(
            &tpath,
            truths.len() + 1,
            format!("{} truth records for {} events", truths.len(), events.len()),
        ));
    }
    for (event, (i, line)) in events.iter_mut().zip(truths) {
        let (track, multiplicity) = parse_truth_line(&tpath, i + 1, line)?;
        event.truth = track;
        event.multiplicity = multiplicity;
    }
    Ok(events)
}

pub fn load_events(path: &Path) -> CliResult<Vec<Event>> {
    let text = read_text(path)?;
    let truth = read_text(&truth_path(path))?;
    parse_events(path, &text, &truth)
}

pub fn save_events(events: &[Event], path: &Path) -> CliResult<()> {
    let (ev, truth) = render_events(events);
    write_text(&truth_path(path), &truth)?;
    write_text(path, &ev)
}
