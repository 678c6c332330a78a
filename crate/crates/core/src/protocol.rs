//! The communication protocol: client endpoint contract, mediating server,
//! and the sequential step scheduler.
//!
//! A client can only talk to the server and knows nothing about its peers
//! except their count. The server answers queries by polling every client in
//! registration order, strictly sequentially: a query completes before the
//! issuing client's step continues. Time is a deterministic logical clock in
//! milliseconds, advanced by per-client step costs; queries arriving at or
//! after the time-out are cancelled without a response.

use std::cell::{Cell, RefCell};
use std::collections::BTreeSet;
use std::fmt;
use std::rc::Rc;
use std::time::Instant;

use num_rational::Ratio;

use crate::canon::Context;
use crate::formula::Formula;
use crate::lang::cfg::NodeId;
use crate::memory::Dereference;

/// Coverage values are exact rationals in [0,1].
pub type Coverage = Ratio<i64>;

pub fn coverage(num: i64, den: i64) -> Coverage {
    Ratio::new(num, den)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cancelled;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TerminationState {
    Success,
    TimeOut,
    MemoryOut,
    Crash,
}

impl TerminationState {
    pub const ALL: [TerminationState; 4] = [
        TerminationState::Success,
        TerminationState::TimeOut,
        TerminationState::MemoryOut,
        TerminationState::Crash,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TerminationState::Success => "Success",
            TerminationState::TimeOut => "Time-out",
            TerminationState::MemoryOut => "Memory-out",
            TerminationState::Crash => "Crash",
        }
    }

    pub fn from_name(s: &str) -> Option<TerminationState> {
        Some(match s {
            "Success" => TerminationState::Success,
            "Time-out" => TerminationState::TimeOut,
            "Memory-out" => TerminationState::MemoryOut,
            "Crash" => TerminationState::Crash,
            _ => return None,
        })
    }
}

impl fmt::Display for TerminationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The six protocol functions plus the driving hooks the scheduler needs.
/// Only `on_location_outdated` and `step` may mutate client state.
pub trait ClientEndpoint {
    /// Stable short name for reports ("box", "oct", "symex"); never exposed
    /// to other clients.
    fn kind(&self) -> &'static str;

    fn get_values(
        &self,
        node: NodeId,
        ctx: &Context,
        derefs: &BTreeSet<Dereference>,
        self_call: bool,
    ) -> Formula;

    fn get_coverage(&self, node: NodeId, ctx: &Context) -> Coverage;

    fn is_relevant_coverage(
        &self,
        node: NodeId,
        ctx: &Context,
        coverage: Coverage,
        self_coverage: Coverage,
    ) -> bool;

    fn is_memory_over_approximated(&self) -> bool;

    fn can_improve_memory_over_approximation(&self) -> bool;

    fn on_location_outdated(
        &mut self,
        node: NodeId,
        ctx: &Context,
        coverage: Coverage,
        self_call: bool,
    );

    /// One computational step. `Err` marks the client crashed.
    fn step(&mut self, link: &mut CommLink<'_>) -> Result<(), String>;

    /// True when the client's analysis has completed (drives Success).
    fn finished(&self) -> bool;

    fn state_count(&self) -> usize;

    /// For abstract interpreters: whether the safety outdate was applied.
    /// `None` for clients without the mechanism.
    fn safety_outdate_applied(&self) -> Option<bool>;

    /// Per (node, context) state formulas, for reporting. Empty for clients
    /// that do not publish invariants.
    fn invariants(&self) -> Vec<((NodeId, Context), Formula)> {
        Vec::new()
    }

    /// Free-form extra dump (e.g. an exploration tree).
    fn extra_dump(&self) -> String {
        String::new()
    }
}

pub type SharedClient = Rc<RefCell<Box<dyn ClientEndpoint>>>;

/// Per-client budget: deterministic step cost and state-count cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub step_cost_ms: u64,
    pub state_cap: usize,
}

pub struct Server {
    clients: Vec<SharedClient>,
    active: Vec<Cell<bool>>,
    clock_ms: Cell<u64>,
    timeout_ms: u64,
    in_outdate: Cell<bool>,
    comm_enabled: bool,
}

impl Server {
    pub fn new(
        clients: Vec<Box<dyn ClientEndpoint>>,
        comm_enabled: bool,
        timeout_ms: u64,
    ) -> Server {
        let active = clients.iter().map(|_| Cell::new(true)).collect();
        Server {
            clients: clients
                .into_iter()
                .map(|c| Rc::new(RefCell::new(c)))
                .collect(),
            active,
            clock_ms: Cell::new(0),
            timeout_ms,
            in_outdate: Cell::new(false),
            comm_enabled,
        }
    }

    pub fn client_count(&self) -> usize {
        self.clients.len()
    }

    pub fn clock_ms(&self) -> u64 {
        self.clock_ms.get()
    }

    pub fn timeout_ms(&self) -> u64 {
        self.timeout_ms
    }

    pub fn comm_enabled(&self) -> bool {
        self.comm_enabled
    }

    pub fn client(&self, i: usize) -> &SharedClient {
        &self.clients[i]
    }

    /// Directly advances the logical clock (scheduler and tests).
    pub fn advance_clock(&self, ms: u64) {
        self.clock_ms.set(self.clock_ms.get() + ms);
    }

    fn timed_out(&self) -> bool {
        self.clock_ms.get() >= self.timeout_ms
    }

    /// Server `get_values`: the caller's own values and coverage first, then
    /// every other client in registration order, conjoining answers whose
    /// coverage the caller finds relevant.
    pub fn get_values(
        &self,
        caller: &dyn ClientEndpoint,
        caller_index: usize,
        node: NodeId,
        ctx: &Context,
        derefs: &BTreeSet<Dereference>,
    ) -> Result<Formula, Cancelled> {
        if self.timed_out() {
            return Err(Cancelled);
        }
        let mut parts = vec![caller.get_values(node, ctx, derefs, true)];
        let cov0 = caller.get_coverage(node, ctx);
        for (j, c) in self.clients.iter().enumerate() {
            if j == caller_index || !self.active[j].get() {
                continue;
            }
            let c = c.borrow();
            let cov = c.get_coverage(node, ctx);
            if caller.is_relevant_coverage(node, ctx, cov, cov0) {
                parts.push(c.get_values(node, ctx, derefs, false));
            }
        }
        Ok(Formula::conj(parts))
    }

    /// True iff every client reports an over-approximated memory and no
    /// outdate notification is being delivered right now.
    pub fn is_memory_over_approximated(
        &self,
        caller: &dyn ClientEndpoint,
        caller_index: usize,
    ) -> Result<bool, Cancelled> {
        if self.timed_out() {
            return Err(Cancelled);
        }
        if self.in_outdate.get() {
            return Ok(false);
        }
        for (j, c) in self.clients.iter().enumerate() {
            let ans = if j == caller_index {
                caller.is_memory_over_approximated()
            } else if self.active[j].get() {
                c.borrow().is_memory_over_approximated()
            } else {
                continue;
            };
            if !ans {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// True iff at least one client responds true.
    pub fn can_improve_memory_over_approximation(
        &self,
        caller: &dyn ClientEndpoint,
        caller_index: usize,
    ) -> Result<bool, Cancelled> {
        if self.timed_out() {
            return Err(Cancelled);
        }
        for (j, c) in self.clients.iter().enumerate() {
            let ans = if j == caller_index {
                caller.can_improve_memory_over_approximation()
            } else if self.active[j].get() {
                c.borrow().can_improve_memory_over_approximation()
            } else {
                continue;
            };
            if ans {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Delivers an outdate notification to every client, with `self_call`
    /// true exactly for the issuer. Notifications at or after the time-out
    /// are ignored.
    pub fn on_location_outdated(
        &self,
        issuer: &mut dyn ClientEndpoint,
        issuer_index: usize,
        node: NodeId,
        ctx: &Context,
        cov: Coverage,
    ) {
        if self.timed_out() {
            return;
        }
        self.in_outdate.set(true);
        for (j, c) in self.clients.iter().enumerate() {
            if j == issuer_index {
                issuer.on_location_outdated(node, ctx, cov, true);
            } else if self.active[j].get() {
                c.borrow_mut().on_location_outdated(node, ctx, cov, false);
            }
        }
        self.in_outdate.set(false);
    }
}

/// A stepping client's view of the server. When communication is disabled
/// the queries fall back to the caller's own answers and notifications go
/// nowhere, which matches running the plain analysis without the protocol.
pub struct CommLink<'a> {
    server: &'a Server,
    caller_index: usize,
}

impl<'a> CommLink<'a> {
    pub fn new(server: &'a Server, caller_index: usize) -> CommLink<'a> {
        CommLink {
            server,
            caller_index,
        }
    }

    pub fn comm_enabled(&self) -> bool {
        self.server.comm_enabled
    }

    pub fn clock_ms(&self) -> u64 {
        self.server.clock_ms()
    }

    pub fn timeout_ms(&self) -> u64 {
        self.server.timeout_ms
    }

    /// Number of communicating clients (1 when isolated).
    pub fn client_count(&self) -> usize {
        if self.server.comm_enabled {
            self.server.client_count()
        } else {
            1
        }
    }

    /// `None` when communication is disabled: the caller must use its own
    /// state directly.
    pub fn get_values(
        &self,
        caller: &dyn ClientEndpoint,
        node: NodeId,
        ctx: &Context,
        derefs: &BTreeSet<Dereference>,
    ) -> Result<Option<Formula>, Cancelled> {
        if !self.server.comm_enabled {
            return Ok(None);
        }
        self.server
            .get_values(caller, self.caller_index, node, ctx, derefs)
            .map(Some)
    }

    pub fn is_memory_over_approximated(
        &self,
        caller: &dyn ClientEndpoint,
    ) -> Result<bool, Cancelled> {
        if !self.server.comm_enabled {
            return Ok(caller.is_memory_over_approximated());
        }
        self.server
            .is_memory_over_approximated(caller, self.caller_index)
    }

    pub fn can_improve_memory_over_approximation(
        &self,
        caller: &dyn ClientEndpoint,
    ) -> Result<bool, Cancelled> {
        if !self.server.comm_enabled {
            return Ok(caller.can_improve_memory_over_approximation());
        }
        self.server
            .can_improve_memory_over_approximation(caller, self.caller_index)
    }

    pub fn on_location_outdated(
        &self,
        caller: &mut dyn ClientEndpoint,
        node: NodeId,
        ctx: &Context,
        cov: Coverage,
    ) {
        if !self.server.comm_enabled {
            return;
        }
        self.server
            .on_location_outdated(caller, self.caller_index, node, ctx, cov);
    }
}

#[derive(Clone, Debug)]
pub struct SchedulerOutcome {
    pub terminations: Vec<(String, TerminationState)>,
    pub clock_ms: u64,
}

/// Round-robin driver: each live client executes one step per round; the
/// logical clock advances by the client's step cost. Completion maps to
/// Success, clock exhaustion to Time-out, exceeding the shared state cap to
/// Memory-out, and a client error to Crash (the client is removed).
pub fn run_scheduler(
    server: &Server,
    budgets: &[Budget],
    total_state_cap: usize,
    real_time: bool,
) -> SchedulerOutcome {
    let n = server.client_count();
    assert_eq!(budgets.len(), n);
    assert!(n > 0, "at least one client");
    let mut live: Vec<bool> = vec![true; n];
    let mut state: Vec<Option<TerminationState>> = vec![None; n];
    let started = Instant::now();
    while live.iter().any(|l| *l) {
        for i in 0..n {
            if !live[i] {
                continue;
            }
            if real_time {
                let wall = started.elapsed().as_millis() as u64;
                if wall > server.clock_ms() {
                    server.advance_clock(wall - server.clock_ms());
                }
            }
            if server.clock_ms() >= server.timeout_ms() {
                for (j, l) in live.iter_mut().enumerate() {
                    if *l {
                        state[j] = Some(TerminationState::TimeOut);
                        *l = false;
                    }
                }
                break;
            }
            server.advance_clock(budgets[i].step_cost_ms);
            let rc = server.client(i).clone();
            let mut client = rc.borrow_mut();
            let mut link = CommLink::new(server, i);
            let res = client.step(&mut link);
            drop(client);
            match res {
                Err(_) => {
                    state[i] = Some(TerminationState::Crash);
                    live[i] = false;
                    server.active[i].set(false);
                    continue;
                }
                Ok(()) => {}
            }
            let total: usize = (0..n)
                .map(|j| server.client(j).borrow().state_count())
                .sum();
            if total > total_state_cap {
                state[i] = Some(TerminationState::MemoryOut);
                live[i] = false;
                server.active[i].set(false);
                continue;
            }
            if server.client(i).borrow().finished() {
                state[i] = Some(TerminationState::Success);
                live[i] = false;
            }
        }
    }
    let terminations = (0..n)
        .map(|i| {
            (
                server.client(i).borrow().kind().to_string(),
                state[i].unwrap_or(TerminationState::TimeOut),
            )
        })
        .collect();
    SchedulerOutcome {
        terminations,
        clock_ms: server.clock_ms(),
    }
}

/// Key=value run settings, readable from a plain text file.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub timeout_ms: u64,
    pub step_cost_box: u64,
    pub step_cost_oct: u64,
    pub step_cost_symex: u64,
    pub state_cap: usize,
    pub config: Option<String>,
    pub real_time: bool,
    pub symex_notify_delay_ms: u64,
    pub context_suffix: usize,
    pub widen_thresholds: Vec<i64>,
}

impl Default for Settings {
    fn default() -> Settings {
        Settings {
            timeout_ms: 150_000,
            step_cost_box: 1,
            step_cost_oct: 2,
            step_cost_symex: 3,
            state_cap: 4096,
            config: None,
            real_time: false,
            symex_notify_delay_ms: 10_000,
            context_suffix: crate::concrete::CONTEXT_SUFFIX_LIMIT,
            widen_thresholds: Vec::new(),
        }
    }
}

impl Settings {
    pub fn parse(text: &str) -> Result<Settings, String> {
        let mut s = Settings::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &str| format!("line {}: {e}", lineno + 1);
            match key {
                "timeout_ms" => s.timeout_ms = value.parse().map_err(|_| bad("bad integer"))?,
                "step_cost_box" => {
                    s.step_cost_box = value.parse().map_err(|_| bad("bad integer"))?
                }
                "step_cost_oct" => {
                    s.step_cost_oct = value.parse().map_err(|_| bad("bad integer"))?
                }
                "step_cost_symex" => {
                    s.step_cost_symex = value.parse().map_err(|_| bad("bad integer"))?
                }
                "state_cap" => s.state_cap = value.parse().map_err(|_| bad("bad integer"))?,
                "config" => s.config = Some(value.to_string()),
                "real_time" => s.real_time = value.parse().map_err(|_| bad("bad bool"))?,
                "symex_notify_delay_ms" => {
                    s.symex_notify_delay_ms = value.parse().map_err(|_| bad("bad integer"))?
                }
                "context_suffix" => {
                    s.context_suffix = value.parse().map_err(|_| bad("bad integer"))?
                }
                "widen_thresholds" => {
                    s.widen_thresholds = value
                        .split(',')
                        .filter(|p| !p.trim().is_empty())
                        .map(|p| p.trim().parse().map_err(|_| bad("bad threshold")))
                        .collect::<Result<_, _>>()?;
                    s.widen_thresholds.sort_unstable();
                }
                _ => return Err(bad(&format!("unknown key `{key}`"))),
            }
        }
        Ok(s)
    }

    pub fn step_cost(&self, kind: &str) -> u64 {
        match kind {
            "box" => self.step_cost_box,
            "oct" => self.step_cost_oct,
            "symex" => self.step_cost_symex,
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    struct Idle {
        name: &'static str,
        steps_to_finish: usize,
        steps: usize,
        states: usize,
    }

    impl ClientEndpoint for Idle {
        fn kind(&self) -> &'static str {
            self.name
        }
        fn get_values(
            &self,
            _: NodeId,
            _: &Context,
            _: &BTreeSet<Dereference>,
            _: bool,
        ) -> Formula {
            Formula::tautology()
        }
        fn get_coverage(&self, _: NodeId, _: &Context) -> Coverage {
            Coverage::one()
        }
        fn is_relevant_coverage(&self, _: NodeId, _: &Context, cov: Coverage, _: Coverage) -> bool {
            cov == Coverage::one()
        }
        fn is_memory_over_approximated(&self) -> bool {
            self.steps >= self.steps_to_finish
        }
        fn can_improve_memory_over_approximation(&self) -> bool {
            !self.is_memory_over_approximated()
        }
        fn on_location_outdated(&mut self, _: NodeId, _: &Context, _: Coverage, _: bool) {}
        fn step(&mut self, _: &mut CommLink<'_>) -> Result<(), String> {
            self.steps += 1;
            self.states += 1;
            Ok(())
        }
        fn finished(&self) -> bool {
            self.steps >= self.steps_to_finish
        }
        fn state_count(&self) -> usize {
            self.states
        }
        fn safety_outdate_applied(&self) -> Option<bool> {
            None
        }
    }

    fn idle(name: &'static str, k: usize) -> Box<dyn ClientEndpoint> {
        Box::new(Idle {
            name,
            steps_to_finish: k,
            steps: 0,
            states: 0,
        })
    }

    #[test]
    fn one_client_finishing_in_k_steps() {
        let server = Server::new(vec![idle("box", 7)], false, 1_000);
        let out = run_scheduler(
            &server,
            &[Budget {
                step_cost_ms: 3,
                state_cap: 100,
            }],
            100,
            false,
        );
        assert_eq!(
            out.terminations,
            vec![("box".into(), TerminationState::Success)]
        );
        assert_eq!(out.clock_ms, 21);
    }

    #[test]
    fn infinite_client_times_out() {
        let server = Server::new(vec![idle("box", usize::MAX)], false, 50);
        let out = run_scheduler(
            &server,
            &[Budget {
                step_cost_ms: 1,
                state_cap: usize::MAX,
            }],
            usize::MAX,
            false,
        );
        assert_eq!(out.terminations[0].1, TerminationState::TimeOut);
        assert_eq!(out.clock_ms, 50);
    }

    #[test]
    fn state_cap_exceeded_marks_memory_out() {
        let server = Server::new(vec![idle("box", usize::MAX)], false, 1_000_000);
        let out = run_scheduler(
            &server,
            &[Budget {
                step_cost_ms: 1,
                state_cap: 10,
            }],
            10,
            false,
        );
        assert_eq!(out.terminations[0].1, TerminationState::MemoryOut);
    }

    #[test]
    fn crash_removes_client_and_run_ends() {
        struct Crasher;
        impl ClientEndpoint for Crasher {
            fn kind(&self) -> &'static str {
                "box"
            }
            fn get_values(
                &self,
                _: NodeId,
                _: &Context,
                _: &BTreeSet<Dereference>,
                _: bool,
            ) -> Formula {
                Formula::tautology()
            }
            fn get_coverage(&self, _: NodeId, _: &Context) -> Coverage {
                Coverage::one()
            }
            fn is_relevant_coverage(
                &self,
                _: NodeId,
                _: &Context,
                _: Coverage,
                _: Coverage,
            ) -> bool {
                false
            }
            fn is_memory_over_approximated(&self) -> bool {
                false
            }
            fn can_improve_memory_over_approximation(&self) -> bool {
                true
            }
            fn on_location_outdated(&mut self, _: NodeId, _: &Context, _: Coverage, _: bool) {}
            fn step(&mut self, _: &mut CommLink<'_>) -> Result<(), String> {
                Err("boom".into())
            }
            fn finished(&self) -> bool {
                false
            }
            fn state_count(&self) -> usize {
                0
            }
            fn safety_outdate_applied(&self) -> Option<bool> {
                None
            }
        }
        let server = Server::new(vec![Box::new(Crasher)], true, 1_000);
        let out = run_scheduler(
            &server,
            &[Budget {
                step_cost_ms: 1,
                state_cap: 10,
            }],
            10,
            false,
        );
        assert_eq!(out.terminations[0].1, TerminationState::Crash);
    }

    #[test]
    fn settings_round_trip() {
        let text =
            "timeout_ms=9000\nstep_cost_box=2\nconfig=b+p\n# comment\nwiden_thresholds=0,10\n";
        let s = Settings::parse(text).unwrap();
        assert_eq!(s.timeout_ms, 9000);
        assert_eq!(s.step_cost_box, 2);
        assert_eq!(s.config.as_deref(), Some("b+p"));
        assert_eq!(s.widen_thresholds, vec![0, 10]);
        assert!(Settings::parse("nope").is_err());
        assert!(Settings::parse("mystery=1").is_err());
    }
}
