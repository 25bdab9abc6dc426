use crate::error::Result;
use crate::miniworld::{encode_features, execute, TaskSpec};
use crate::tagger::{Sample, Tagger};
use crate::types::{ExecutionFeedback, Trajectory};

/// Supervised examples for fitting a learned tagger: every candidate program
/// of every task, labelled by `teacher` as an untrained agent would see it
/// (value estimate zero, so the TD error equals the reward).
pub fn distill_dataset(corpus: &[TaskSpec], teacher: &dyn Tagger) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for task in corpus {
        for (action, program) in task.candidates()?.into_iter().enumerate() {
            let outcome = execute(&program, &task.tables, &task.expected);
            let trajectory = Trajectory {
                task_id: task.id.clone(),
                context: task.context.clone(),
                action,
                prompt_features: encode_features(&task.prompt, &program, outcome.reward),
                generated_program: program,
                execution_feedback: ExecutionFeedback {
                    kind: outcome.kind,
                    detail: outcome.detail,
                },
                reward: outcome.reward,
            };
            let target = teacher.tag(&trajectory, outcome.reward)?;
            out.push(Sample {
                features: trajectory.prompt_features,
                target,
            });
        }
    }
    Ok(out)
}
