//! Plain-text file formats.
//!
//! Policy file (`.policy`), one item per line:
//!
//! ```text
//! ddopg-policy 1
//! dims 4 32 32 1
//! activation tanh identity
//! count 1249
//! <count lines, one parameter each, in flat packing order>
//! ```
//!
//! `dims` lists input, hidden and output widths; `activation` names the
//! hidden and output nonlinearities. Reals are written in Rust's shortest
//! round-trip scientific form (`{:e}`, e.g. `-1.25e-3`), so a save/load
//! cycle is bit-exact. Lines starting with `#` are ignored.
//!
//! Trajectory file (`.traj`): a header line
//! `ddopg-trajectory 1 <H> <state_dim> <action_dim> <gamma>` followed by
//! `H` lines of `s_1 .. s_n a_1 .. a_m r`, space separated.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numkit::{MlpSpec, RealMat};
use crate::policy::PolicyParams;
use crate::rollout::Trajectory;

const POLICY_MAGIC: &str = "ddopg-policy 1";
const TRAJ_MAGIC: &str = "ddopg-trajectory";
const ACTIVATION: &str = "tanh identity";

pub fn policy_to_string(params: &PolicyParams) -> String {
    let spec = params.spec();
    let mut out = String::new();
    out.push_str(POLICY_MAGIC);
    out.push('\n');
    let mut dims = vec![spec.input_dim()];
    dims.extend_from_slice(spec.hidden_dims());
    dims.push(spec.output_dim());
    let dims: Vec<String> = dims.iter().map(usize::to_string).collect();
    writeln!(out, "dims {}", dims.join(" ")).expect("string write");
    writeln!(out, "activation {ACTIVATION}").expect("string write");
    writeln!(out, "count {}", params.len()).expect("string write");
    for v in params.theta() {
        writeln!(out, "{v:e}").expect("string write");
    }
    out
}

pub fn policy_from_str(text: &str) -> Result<PolicyParams> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let mut next = |what: &str| lines.next().ok_or_else(|| Error::Format(format!("policy file ends before {what}")));
    if next("header")? != POLICY_MAGIC {
        return Err(Error::Format(format!("policy file must start with '{POLICY_MAGIC}'")));
    }
    let dims: Vec<usize> = keyed(next("dims")?, "dims")?
        .split_whitespace()
        .map(|d| d.parse().map_err(|_| Error::Format(format!("bad dimension '{d}'"))))
        .collect::<Result<_>>()?;
    if dims.len() < 2 {
        return Err(Error::Format("policy dims need at least input and output".into()));
    }
    let activation = keyed(next("activation")?, "activation")?;
    if activation.split_whitespace().collect::<Vec<_>>().join(" ") != ACTIVATION {
        return Err(Error::Format(format!("unsupported activation '{activation}'")));
    }
    let count: usize = keyed(next("count")?, "count")?
        .parse()
        .map_err(|_| Error::Format("bad parameter count".into()))?;
    let spec = MlpSpec::new(dims[0], dims[1..dims.len() - 1].to_vec(), dims[dims.len() - 1])?;
    if count != spec.param_count() {
        return Err(Error::Format(format!("count {count} does not match network {spec} ({})", spec.param_count())));
    }
    let mut theta = Vec::with_capacity(count);
    for _ in 0..count {
        let line = next("all parameters")?;
        theta.push(line.parse().map_err(|_| Error::Format(format!("bad parameter '{line}'")))?);
    }
    if let Some(extra) = lines.next() {
        return Err(Error::Format(format!("trailing content after parameters: '{extra}'")));
    }
    PolicyParams::new(spec, theta)
}

fn keyed<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .filter(|rest| rest.starts_with(' '))
        .map(str::trim)
        .ok_or_else(|| Error::Format(format!("expected '{key} ...', found '{line}'")))
}

pub fn save_policy(params: &PolicyParams, path: &Path) -> Result<()> {
    Ok(std::fs::write(path, policy_to_string(params))?)
}

pub fn load_policy(path: &Path) -> Result<PolicyParams> {
    policy_from_str(&std::fs::read_to_string(path)?)
}

pub fn trajectory_to_string(traj: &Trajectory) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{TRAJ_MAGIC} 1 {} {} {} {:e}",
        traj.len(),
        traj.state_dim(),
        traj.action_dim(),
        traj.gamma()
    )
    .expect("string write");
    for t in 0..traj.len() {
        let fields: Vec<String> = traj
            .states()
            .row(t)
            .iter()
            .chain(traj.actions().row(t))
            .chain(std::iter::once(&traj.rewards()[t]))
            .map(|v| format!("{v:e}"))
            .collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}

pub fn trajectory_from_str(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
    if header.len() != 6 || header[0] != TRAJ_MAGIC || header[1] != "1" {
        return Err(Error::Format(format!("trajectory file must start with '{TRAJ_MAGIC} 1 H n m gamma'")));
    }
    let bad = |what: &str| Error::Format(format!("bad trajectory {what}"));
    let len: usize = header[2].parse().map_err(|_| bad("length"))?;
    let n: usize = header[3].parse().map_err(|_| bad("state dim"))?;
    let m: usize = header[4].parse().map_err(|_| bad("action dim"))?;
    let gamma: f64 = header[5].parse().map_err(|_| bad("gamma"))?;
    let mut states = RealMat::with_cols(n);
    let mut actions = RealMat::with_cols(m);
    let mut rewards = Vec::with_capacity(len);
    for line in lines.by_ref().take(len) {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|v| v.parse().map_err(|_| bad("value")))
            .collect::<Result<_>>()?;
        if vals.len() != n + m + 1 {
            return Err(bad("row width"));
        }
        states.push_row(&vals[..n])?;
        actions.push_row(&vals[n..n + m])?;
        rewards.push(vals[n + m]);
    }
    if rewards.len() != len || lines.next().is_some() {
        return Err(bad("row count"));
    }
    Trajectory::new(states, actions, rewards, gamma)
}
