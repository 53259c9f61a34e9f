use std::path::Path;
use std::time::Instant;

use chrono::Utc;

use crate::grid::GridSpec;
use crate::interpreter::{ground_truth, Interpreter, LlmInterpreter, Observation, OracleInterpreter, SceneContext};
use crate::nav::{
    ActionCall, ActionName, ActionResolver, DecisionKind, DecisionVoter, GreedyOracle, LlmClassifier, LlmResolver,
    LlmVoter, NavQuery, OracleVoter, RuleClassifier, VoterBackend, VoterDecision,
};
use crate::sim::{apply_action, render, resolve_scene, Pose, Scene, ROTATE_SPEED};

use super::telemetry::{TaskReport, Termination, TimingAverages, TurnRecord, TurnTimings};
use super::{Backend, Runtime, SetupError, TaskKind, TaskSpec};

/// The per-task component set.
pub struct Backends {
    pub interpreter: Box<dyn Interpreter>,
    pub decider: DecisionVoter,
    pub resolver: Box<dyn ActionResolver>,
    /// Oracle stop rule for scans (full turn or target in view) instead of the verdict.
    pub oracle_scan_stop: bool,
}

/// Rendering and grid settings shared by every turn.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub width: u32,
    pub height: u32,
    pub grid: GridSpec,
    pub parallel_interpretation: bool,
    pub interpreter_temperature: Option<f64>,
}

impl RunSettings {
    pub fn from_runtime(runtime: &Runtime) -> Result<Self, SetupError> {
        let d = &runtime.config.defaults;
        Ok(Self {
            width: d.frame_width,
            height: d.frame_height,
            grid: runtime.config.grid()?,
            parallel_interpretation: d.parallel_interpretation,
            interpreter_temperature: d.interpreter_temperature,
        })
    }
}

fn endpoint<'a>(
    ep: &'a Option<crate::gateway::ModelEndpoint>,
    role: &str,
) -> Result<&'a crate::gateway::ModelEndpoint, SetupError> {
    ep.as_ref()
        .ok_or_else(|| SetupError::Config(format!("no `{role}` endpoint configured")))
}

impl Backends {
    pub fn for_task(spec: &TaskSpec, runtime: &Runtime, settings: &RunSettings) -> Result<Self, SetupError> {
        let c = spec.components();
        let eps = &runtime.config.endpoints;

        let interpreter: Box<dyn Interpreter> = match c.interpreter {
            Backend::Oracle => {
                Box::new(OracleInterpreter::new(settings.grid.clone()).with_noise(spec.noise, spec.seed))
            }
            Backend::Llm => Box::new(
                LlmInterpreter::new(
                    runtime.gateway()?.clone(),
                    endpoint(&eps.interpreter, "interpreter")?.clone(),
                    settings.grid.clone(),
                )
                .with_temperature(settings.interpreter_temperature)
                .parallel(settings.parallel_interpretation),
            ),
        };

        let classifier: Box<dyn crate::nav::Classifier> = match c.classifier {
            Backend::Oracle => Box::new(RuleClassifier::new().with_target(spec.target_label.clone())),
            Backend::Llm => Box::new(LlmClassifier::new(
                runtime.gateway()?.clone(),
                endpoint(&eps.classifier, "classifier")?.clone(),
            )),
        };

        let voters: Vec<Box<dyn VoterBackend>> = match c.voters {
            Backend::Oracle => (0..spec.oracle_voters)
                .map(|i| {
                    Box::new(
                        OracleVoter::new(format!("oracle-{}", i + 1), spec.target_label.clone())
                            .with_flips(spec.voter_flip_p, spec.seed.wrapping_add(i as u64)),
                    ) as Box<dyn VoterBackend>
                })
                .collect(),
            Backend::Llm => {
                if eps.voters.is_empty() {
                    return Err(SetupError::Config("no `voters` endpoints configured".into()));
                }
                let gw = runtime.gateway()?;
                eps.voters
                    .iter()
                    .map(|ep| Box::new(LlmVoter::new(gw.clone(), ep.clone())) as Box<dyn VoterBackend>)
                    .collect()
            }
        };

        let resolver: Box<dyn ActionResolver> = match c.action {
            Backend::Oracle => Box::new(GreedyOracle::new(
                spec.target_label.clone(),
                settings.grid.clone(),
                spec.rotation_step,
            )),
            Backend::Llm => Box::new(LlmResolver::new(
                runtime.gateway()?.clone(),
                endpoint(&eps.action, "action")?.clone(),
            )),
        };

        Ok(Self {
            interpreter,
            decider: DecisionVoter::new(classifier, voters),
            resolver,
            oracle_scan_stop: c.voters == Backend::Oracle,
        })
    }
}

/// Identity and presentation of one run inside a suite or service.
#[derive(Debug, Clone, Default)]
pub struct RunLabels {
    pub attempt: String,
    pub environment: String,
}

struct ScanState {
    rotations: u32,
}

/// The textual half of the context, used as the reply to scene questions.
fn answer_from(ctx: &SceneContext) -> String {
    if ctx.textual.entries.is_empty() {
        return "I do not see any objects.".into();
    }
    let parts: Vec<String> = ctx
        .textual
        .entries
        .iter()
        .map(|e| {
            if e.features.is_empty() {
                e.name.clone()
            } else {
                format!("{} ({})", e.name, e.features)
            }
        })
        .collect();
    format!("I can see: {}.", parts.join("; "))
}

/// Runs the turn loop from `start`, calling `observer` after every turn.
pub fn execute(
    spec: &TaskSpec,
    scene: &Scene,
    start: Pose,
    backends: &Backends,
    settings: &RunSettings,
    labels: &RunLabels,
    observer: &mut dyn FnMut(&TurnRecord),
) -> TaskReport {
    let started_at = Utc::now();
    let mut report = TaskReport {
        attempt: labels.attempt.clone(),
        environment: labels.environment.clone(),
        task: Some(spec.clone()),
        success: false,
        turns: 0,
        records: Vec::new(),
        averages: TimingAverages::default(),
        termination: Termination::MaxTurns,
        rotations: None,
        final_pose: Some(start),
        answer: None,
        diagnostic: None,
        started_at,
        finished_at: started_at,
    };
    let query = match NavQuery::new(&spec.query) {
        Ok(q) => q,
        Err(e) => {
            report.termination = Termination::Error;
            report.diagnostic = Some(e.to_string());
            return report;
        }
    };

    let step = spec.rotation_step;
    let full_turn = spec.steps_per_revolution();
    let rotation_call =
        ActionCall::timed(ActionName::InPlaceRotateToLeft, step / ROTATE_SPEED).expect("validated rotation step");
    let mut scan = (spec.kind == TaskKind::Scan).then_some(ScanState { rotations: 0 });
    let mut pose = start;
    let mut finished: Option<Termination> = None;

    for turn in 1..=spec.max_turns {
        let turn_started = Instant::now();
        let frame = render(scene, &pose, settings.width, settings.height);
        let obs = Observation {
            frame: &frame,
            scene,
            pose: &pose,
        };
        let mut timings = TurnTimings::default();
        let mut record = TurnRecord {
            turn,
            decision: None,
            action: None,
            timings,
            pose_after: pose,
            frame_digest: String::new(),
            rotation: None,
            error: None,
        };

        let mut fail = |mut record: TurnRecord, timings: TurnTimings, message: String, report: &mut TaskReport| {
            record.timings = TurnTimings {
                total_s: turn_started.elapsed().as_secs_f64(),
                ..timings
            };
            record.error = Some(message.clone());
            observer(&record);
            report.records.push(record);
            report.diagnostic = Some(message);
        };

        let mut ctx = match backends.interpreter.interpret(&obs) {
            Ok(c) => c,
            Err(e) => {
                record.frame_digest = frame.digest();
                fail(record, timings, e.to_string(), &mut report);
                finished = Some(Termination::Error);
                break;
            }
        };
        timings.visual_s = ctx.timing.visual_s;
        timings.textual_s = ctx.timing.textual_s;
        record.frame_digest = ctx.frame_digest.clone();
        ctx.ground_truth = Some(ground_truth(scene, &pose, &settings.grid));

        let voting_started = Instant::now();
        let decision = backends.decider.decide(&query, &ctx);
        timings.voter_s = voting_started.elapsed().as_secs_f64();
        let decision: VoterDecision = match decision {
            Ok(d) => d,
            Err(e) => {
                fail(record, timings, e.to_string(), &mut report);
                finished = Some(Termination::Error);
                break;
            }
        };
        report.turns += 1;
        let kind = decision.kind;
        record.decision = Some(decision.clone());

        let action_started = Instant::now();
        let mut action: Option<ActionCall> = None;
        match kind {
            DecisionKind::GoalReached => {
                report.success = true;
                finished = Some(Termination::GoalReached);
            }
            DecisionKind::SemanticInterpreter => {
                report.answer = Some(answer_from(&ctx));
                report.success = true;
                finished = Some(Termination::Completed);
            }
            DecisionKind::ActionNavigator | DecisionKind::GoalProgress => {
                if let Some(s) = &scan {
                    let target_seen = spec
                        .target_label
                        .as_deref()
                        .and_then(|t| ctx.truth_for(t))
                        .is_some_and(|g| g.visible);
                    let full = s.rotations >= full_turn;
                    // Model voters end a goal scan only through their verdict.
                    let stop = if backends.oracle_scan_stop || kind == DecisionKind::ActionNavigator {
                        full || (backends.oracle_scan_stop && target_seen)
                    } else {
                        false
                    };
                    if stop {
                        record.rotation = Some(s.rotations);
                        scan = None;
                        if spec.kind == TaskKind::Scan {
                            report.success = spec.target_label.is_none() || target_seen;
                            finished = Some(Termination::Completed);
                        } else if kind == DecisionKind::ActionNavigator {
                            report.success = true;
                            finished = Some(Termination::Completed);
                        }
                    } else {
                        action = Some(rotation_call);
                    }
                }
                if action.is_none() && finished.is_none() && scan.is_none() {
                    match backends.resolver.resolve(&query, &ctx, &decision) {
                        Ok(call) if call.name() == ActionName::Scan360 => {
                            scan = Some(ScanState { rotations: 0 });
                            action = Some(rotation_call);
                        }
                        Ok(call) => {
                            action = Some(call);
                            if kind == DecisionKind::ActionNavigator {
                                report.success = true;
                                finished = Some(Termination::Completed);
                            }
                        }
                        Err(e) => {
                            timings.action_s = action_started.elapsed().as_secs_f64();
                            fail(record, timings, e.to_string(), &mut report);
                            finished = Some(Termination::Error);
                            break;
                        }
                    }
                }
                if let Some(call) = &action {
                    pose = apply_action(scene, &pose, call);
                    if let Some(s) = scan.as_mut() {
                        s.rotations += 1;
                        record.rotation = Some(s.rotations);
                        report.rotations = Some(s.rotations);
                    }
                }
            }
        }
        timings.action_s = action_started.elapsed().as_secs_f64();
        if record.rotation.is_some() {
            report.rotations = record.rotation;
        }
        record.action = action;
        record.pose_after = pose;
        timings.total_s = turn_started.elapsed().as_secs_f64();
        record.timings = timings;
        observer(&record);
        report.records.push(record);
        if finished.is_some() {
            break;
        }
    }

    report.termination = finished.unwrap_or(Termination::MaxTurns);
    report.final_pose = Some(pose);
    report.averages = TimingAverages::of(&report.records);
    report.finished_at = Utc::now();
    report
}

/// Loads the scene, builds the backends and runs the task from the scene's start pose.
pub fn run_task(spec: &TaskSpec, runtime: &Runtime) -> TaskReport {
    run_task_in(spec, runtime, None, &RunLabels::default())
}

/// `run_task` for a scan: rotation starts on the first turn whatever the query says.
pub fn run_scan(spec: &TaskSpec, runtime: &Runtime) -> TaskReport {
    run_task(&spec.clone().with_kind(TaskKind::Scan), runtime)
}

/// `run_task` with scene paths taken relative to `base_dir` and explicit labels.
pub fn run_task_in(spec: &TaskSpec, runtime: &Runtime, base_dir: Option<&Path>, labels: &RunLabels) -> TaskReport {
    let mut labels = labels.clone();
    if labels.environment.is_empty() {
        labels.environment = spec.scene.clone();
    }
    let setup = || -> Result<(Scene, Backends, RunSettings), SetupError> {
        spec.validate()?;
        let scene = resolve_scene(&spec.scene, base_dir).map_err(|e| SetupError::Scene(e.to_string()))?;
        let settings = RunSettings::from_runtime(runtime)?;
        let backends = Backends::for_task(spec, runtime, &settings)?;
        Ok((scene, backends, settings))
    };
    match setup() {
        Ok((scene, backends, settings)) => {
            if labels.environment == spec.scene {
                labels.environment = scene.name().to_string();
            }
            execute(
                spec,
                &scene,
                scene.agent_start(),
                &backends,
                &settings,
                &labels,
                &mut |_| {},
            )
        }
        Err(e) => TaskReport::setup_failure(labels.attempt, labels.environment, Some(spec.clone()), e.to_string()),
    }
}
