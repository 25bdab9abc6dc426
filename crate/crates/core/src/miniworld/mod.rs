//! Desk-scale dataframe pipeline world: tables, a small relational DSL with
//! an execution oracle, bug injection, feature encoding and a learnable agent.

mod agent;
mod corpus;
mod features;
mod mutate;
mod program;
mod table;

pub use agent::{normalized_entropy, softmax, Action, Agent, AgentConfig};
pub use corpus::{
    builtin_corpus, generate_corpus, load_corpus, save_corpus, validate_corpus, CorpusCheck,
    TaskSpec, CONTEXTS, CORPUS_SEED, TASKS_PER_CONTEXT,
};
pub use features::{
    encode_features, program_tokens, prompt_tokens, stable_hash, PROGRAM_DIMS, PROMPT_DIMS,
};
pub use mutate::{mutate, mutation_space, BugKind};
pub use program::{
    execute, run, schemas, AggFn, Cmp, ExecFailure, Op, Outcome, Program, REWARD_FAILED,
    REWARD_PASS, REWARD_SEMANTIC,
};
pub use table::{Cell, NamedTable, Table};
