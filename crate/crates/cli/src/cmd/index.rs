use qorpilot_core::docmaker::{CardStore, SourceSet};
use qorpilot_core::retrieval::{ingest_literature, repo_corpus, save_index, SearchIndex};
use serde_json::json;

use crate::config::Config;
use crate::error::CliError;
use crate::io::{emit, load_graph};
use crate::IndexArgs;

pub const REPO_DIR: &str = "repo";
pub const LITERATURE_DIR: &str = "literature";

pub fn run(args: &IndexArgs, config: &Config) -> Result<u8, CliError> {
    let graph = load_graph(&args.graph)?;
    let sources = SourceSet::load(&args.repo, &graph)?;
    let cards = CardStore::load_dir(&args.cards)?;
    let embedder = super::embedder(args.embed_cmd.as_ref(), &config.index);
    let index_config = config.index.index_config();

    let repo = SearchIndex::build(index_config, repo_corpus(&graph, &cards, &sources, embedder.as_ref())?)?;
    let lit_docs = match &args.literature {
        Some(dir) if !dir.is_dir() => return Err(CliError::MissingArtifact(dir.display().to_string())),
        Some(dir) => ingest_literature(dir, embedder.as_ref())?,
        None => Vec::new(),
    };
    let lit = SearchIndex::build(index_config, lit_docs)?;
    save_index(&repo, &args.out.join(REPO_DIR))?;
    save_index(&lit, &args.out.join(LITERATURE_DIR))?;
    emit(&json!({
        "out": args.out.display().to_string(),
        "repo_docs": repo.len(),
        "literature_docs": lit.len(),
    }));
    Ok(0)
}
