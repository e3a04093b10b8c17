use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;

use mwekit_core::consistency::{apply_decisions, audit, CandidateStatus, ConsistencyError, ConsistencyReport, Decision};
use mwekit_core::cupt::write_cupt;
use mwekit_core::eval::{evaluate, iaa, stats_all, CategoryRecall, CorpusStats, EvalOptions, EvalReport, GroupStats};
use mwekit_core::identify::{identify_corpus, IdentifyError, MatchConfig};
use mwekit_core::llm::{build_prompt, parse_llm_output, to_llm_input, to_llm_output, Definition};
use mwekit_core::typetag::tag_corpus;
use mwekit_core::{Corpus, MweType};
use serde::{Deserialize, Serialize};

use crate::input::{check_single_stdin, create, read_corpus, read_lexicon, read_text, write_err, Loaded};
use crate::{Cli, CliError, Command, LlmOp};

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let cupt11 = cli.cupt11;
    match cli.command {
        Command::Convert {
            input,
            out,
            drop_unclear,
        } => {
            let loaded = read_corpus(&input, cupt11)?;
            let corpus = if drop_unclear {
                loaded.corpus.without_unclear()
            } else {
                loaded.corpus
            };
            emit_corpus(&corpus, out.output.as_ref())
        }
        Command::Identify {
            input,
            out,
            lexicon,
            matching,
        } => {
            let cfg = matching.config();
            let lex = read_lexicon(&lexicon)?;
            let loaded = read_corpus(&input, cupt11)?;
            let predicted = identify_corpus(&loaded.corpus, &lex, &cfg).map_err(|errs| {
                let lines: Vec<String> = errs
                    .0
                    .iter()
                    .map(|e| match e {
                        IdentifyError::MissingLemma(m) => format!("{}: {e}", loaded.locate(&m.sentence_id)),
                        IdentifyError::Model(_) => format!("{}: {e}", loaded.name),
                    })
                    .collect();
                CliError::Data(lines.join("\n"))
            })?;
            emit_corpus(&predicted, out.output.as_ref())
        }
        Command::TagTypes { input, out, force } => {
            let loaded = read_corpus(&input, cupt11)?;
            let outcome = tag_corpus(&loaded.corpus, force).map_err(|e| CliError::Data(format!("{}: {e}", loaded.name)))?;
            for d in &outcome.diagnostics {
                eprintln!("{}: {d}", loaded.locate(&d.sentence_id));
            }
            emit_corpus(&outcome.corpus, out.output.as_ref())
        }
        Command::Evaluate {
            gold,
            pred,
            train,
            lexicon,
            json,
        } => {
            check_single_stdin([gold.as_str(), pred.as_str()].into_iter().chain(train.as_deref()))?;
            let lex = lexicon.as_deref().map(read_lexicon).transpose()?;
            let gold = read_corpus(&gold, cupt11)?;
            let pred = read_corpus(&pred, cupt11)?;
            let train = train.as_deref().map(|t| read_corpus(t, cupt11)).transpose()?;
            let opts = EvalOptions {
                lexicon: lex.as_ref(),
                train: train.as_ref().map(|t| &t.corpus),
            };
            let report = evaluate(&gold.corpus, &pred.corpus, opts)
                .map_err(|e| CliError::Data(format!("{} vs {}: {e}", gold.name, pred.name)))?;
            if json {
                emit_json(&report)
            } else {
                emit_text(&render_eval(&report))
            }
        }
        Command::Stats { files, json } => {
            check_single_stdin(files.iter().map(String::as_str))?;
            let loaded = files
                .iter()
                .map(|f| read_corpus(f, cupt11))
                .collect::<Result<Vec<_>, _>>()?;
            let report = stats_report(&loaded);
            if json {
                emit_json(&report)
            } else {
                emit_text(&render_stats(&report))
            }
        }
        Command::CheckConsistency {
            input,
            report,
            max_gap,
        } => {
            let cfg = MatchConfig {
                max_gap,
                ..MatchConfig::default()
            };
            let loaded = read_corpus(&input, cupt11)?;
            let rep = audit(&loaded.corpus, &cfg)
                .map_err(|e| CliError::Data(format!("{}: {e}", loaded.locate(&e.sentence_id))))?;
            eprintln!(
                "{}: {} candidate(s) from {} labeled key(s)",
                loaded.name,
                rep.candidates.len(),
                rep.labeled_keys
            );
            let mut w = create(report.as_ref())?;
            serde_json::to_writer_pretty(&mut w, &rep).map_err(|e| CliError::Data(e.to_string()))?;
            writeln!(w).and_then(|_| w.flush()).map_err(write_err)
        }
        Command::ApplyConsistency {
            input,
            out,
            report,
            accept_all,
        } => {
            let rep: ConsistencyReport = serde_json::from_str(&read_text(&report)?)
                .map_err(|e| CliError::Data(format!("{}:{}: {e}", report.display(), e.line())))?;
            if rep.schema_version != mwekit_core::consistency::REPORT_SCHEMA_VERSION {
                return Err(CliError::Data(format!(
                    "{}: unsupported schema_version {}",
                    report.display(),
                    rep.schema_version
                )));
            }
            let loaded = read_corpus(&input, cupt11)?;
            let decisions: Vec<_> = rep
                .candidates
                .into_iter()
                .filter_map(|c| {
                    let d = match c.status {
                        CandidateStatus::Accepted => Decision::Accepted,
                        CandidateStatus::Rejected => Decision::Rejected,
                        CandidateStatus::Pending if accept_all => Decision::Accepted,
                        CandidateStatus::Pending => return None,
                    };
                    Some((c, d))
                })
                .collect();
            let corpus = apply_decisions(&loaded.corpus, &decisions).map_err(|e| match &e {
                ConsistencyError::StaleCandidate { id, .. } => {
                    let sid = id.rsplit_once(':').map_or(id.as_str(), |(s, _)| s);
                    CliError::Data(format!("{}: {e}", loaded.locate(sid)))
                }
                ConsistencyError::Model(_) => CliError::Data(format!("{}: {e}", loaded.name)),
            })?;
            emit_corpus(&corpus, out.output.as_ref())
        }
        Command::Iaa { files, json } => {
            check_single_stdin(files.iter().map(String::as_str))?;
            let loaded = files
                .iter()
                .map(|f| read_corpus(f, cupt11))
                .collect::<Result<Vec<_>, _>>()?;
            let corpora: Vec<Corpus> = loaded.iter().map(|l| l.corpus.clone()).collect();
            let report = iaa(&corpora).map_err(|e| CliError::Data(e.to_string()))?;
            if json {
                emit_json(&report)
            } else {
                let mut text = String::new();
                for (name, row) in files.iter().zip(&report.pairwise_f1) {
                    let cells: Vec<String> = row.iter().map(|f| format!("{f:.4}")).collect();
                    text.push_str(&format!("{}  {name}\n", cells.join("  ")));
                }
                text.push_str(&format!("mean F1={:.4} max F1={:.4}\n", report.mean, report.max));
                emit_text(&text)
            }
        }
        Command::LlmFormat { op } => llm_format(op, cupt11),
        Command::Serve { data, port, host } => {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| CliError::Data(e.to_string()))?;
            rt.block_on(mwekit_service::serve(&data, SocketAddr::new(host, port)))
                .map_err(|e| CliError::Data(e.to_string()))
        }
    }
}

fn emit_corpus(corpus: &Corpus, path: Option<&PathBuf>) -> Result<(), CliError> {
    let mut w = create(path)?;
    write_cupt(corpus, &mut w).and_then(|_| w.flush()).map_err(write_err)
}

fn emit_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let mut w = create(None)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(write_err)
}

fn emit_text(text: &str) -> Result<(), CliError> {
    let mut w = create(None)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(write_err)
}

fn emit_jsonl<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
    let mut w = create(None)?;
    for row in rows {
        serde_json::to_writer(&mut w, &row).map_err(|e| CliError::Data(e.to_string()))?;
        writeln!(w).map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

fn fmt_recall(c: &CategoryRecall) -> String {
    match c.recall {
        Some(r) => format!("{:>5}/{:<5} {:>7.2}", c.correct, c.gold, 100.0 * r),
        None => format!("{:>5}/{:<5} {:>7}", c.correct, c.gold, "n/a"),
    }
}

fn render_eval(r: &EvalReport) -> String {
    let mut s = format!(
        "gold={} pred={} correct={}\nprecision={:.4} recall={:.4} F1={:.4}\n",
        r.gold, r.pred, r.correct, r.precision, r.recall, r.f1
    );
    for (name, cats) in &r.breakdowns {
        s.push_str(&format!("\nrecall by {name}\n"));
        for c in cats {
            s.push_str(&format!("  {:<16} {}\n", c.category, fmt_recall(c)));
        }
    }
    s
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FileStats {
    pub path: String,
    #[serde(flatten)]
    pub stats: GroupStats,
}

/// `stats` output: totals and per-source groups over all files, plus each file on its own.
#[derive(Debug, Serialize, Deserialize)]
pub struct StatsReport {
    #[serde(flatten)]
    pub stats: CorpusStats,
    pub files: Vec<FileStats>,
}

fn stats_report(loaded: &[Loaded]) -> StatsReport {
    let corpora: Vec<Corpus> = loaded.iter().map(|l| l.corpus.clone()).collect();
    StatsReport {
        stats: stats_all(&corpora),
        files: loaded
            .iter()
            .map(|l| FileStats {
                path: l.name.clone(),
                stats: mwekit_core::eval::group_stats(l.corpus.sentences()),
            })
            .collect(),
    }
}

fn render_stats(r: &StatsReport) -> String {
    let mut rows: Vec<(String, &GroupStats)> = vec![("total".into(), &r.stats.total)];
    if r.files.len() > 1 {
        rows.extend(r.files.iter().map(|f| (format!("file {}", f.path), &f.stats)));
    }
    rows.extend(r.stats.by_source.iter().map(|(k, v)| (format!("source {k}"), v)));
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(5).max(5);

    let labels: Vec<&str> = MweType::ALL.iter().map(|t| t.label()).collect();
    let mut s = format!("{:<width$} {:>9} {:>8} {:>6} {:>7}", "", "sentences", "words", "MWEs", "density");
    for l in &labels {
        s.push_str(&format!(" {l:>8}"));
    }
    s.push('\n');
    for (name, g) in &rows {
        s.push_str(&format!(
            "{name:<width$} {:>9} {:>8} {:>6} {:>6.1}%",
            g.sentences, g.words, g.mwes, g.density
        ));
        for l in &labels {
            match g.type_proportions.get(*l) {
                Some(p) => s.push_str(&format!(" {p:>7.1}%")),
                None => s.push_str(&format!(" {:>8}", "-")),
            }
        }
        if g.untyped > 0 {
            s.push_str(&format!("  ({} untyped)", g.untyped));
        }
        s.push('\n');
    }
    s.push_str("\ndiscontinuous MWEs by type\n");
    for (name, g) in &rows {
        s.push_str(&format!("{name:<width$}"));
        for l in &labels {
            match g.discontinuity_by_type.get(*l).and_then(|r| r.percent) {
                Some(p) => s.push_str(&format!(" {p:>7.1}%")),
                None => s.push_str(&format!(" {:>8}", "-")),
            }
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct PromptLine<'a> {
    sentence_id: &'a str,
    system: String,
    user: String,
}

#[derive(Serialize)]
struct TargetLine<'a> {
    sentence_id: &'a str,
    input: String,
    output: String,
}

#[derive(Deserialize)]
struct AnswerLine {
    sentence_id: String,
    output: String,
}

fn llm_format(op: LlmOp, cupt11: bool) -> Result<(), CliError> {
    match op {
        LlmOp::Prompt { input, definition } => {
            let loaded = read_corpus(&input, cupt11)?;
            let definition: Definition = definition.into();
            let mut rows = Vec::with_capacity(loaded.corpus.len());
            for s in loaded.corpus.sentences() {
                let p = build_prompt(s, definition)
                    .map_err(|e| CliError::Data(format!("{}: sentence {}: {e}", loaded.locate(s.id()), s.id())))?;
                rows.push(PromptLine {
                    sentence_id: s.id(),
                    system: p.system,
                    user: p.user,
                });
            }
            emit_jsonl(rows)
        }
        LlmOp::Target { input } => {
            let loaded = read_corpus(&input, cupt11)?;
            let mut rows = Vec::with_capacity(loaded.corpus.len());
            for s in loaded.corpus.sentences() {
                let input = to_llm_input(s)
                    .map_err(|e| CliError::Data(format!("{}: sentence {}: {e}", loaded.locate(s.id()), s.id())))?;
                rows.push(TargetLine {
                    sentence_id: s.id(),
                    input,
                    output: to_llm_output(s),
                });
            }
            emit_jsonl(rows)
        }
        LlmOp::Parse { input, outputs, out } => {
            let loaded = read_corpus(&input, cupt11)?;
            let text = read_text(&outputs)?;
            let name = outputs.display().to_string();
            let mut answers: HashMap<String, (usize, String)> = HashMap::new();
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let a: AnswerLine =
                    serde_json::from_str(line).map_err(|e| CliError::Data(format!("{name}:{}: {e}", i + 1)))?;
                if loaded.corpus.get(&a.sentence_id).is_none() {
                    return Err(CliError::Data(format!("{name}:{}: unknown sentence {:?}", i + 1, a.sentence_id)));
                }
                if let Some((first, _)) = answers.insert(a.sentence_id.clone(), (i + 1, a.output)) {
                    return Err(CliError::Data(format!(
                        "{name}:{}: second answer for sentence {:?} (first on line {first})",
                        i + 1,
                        a.sentence_id
                    )));
                }
            }
            let mut warnings: BTreeMap<usize, Vec<String>> = BTreeMap::new();
            let corpus = loaded
                .corpus
                .map_sentences(|s| {
                    let Some((line, output)) = answers.get(s.id()) else {
                        eprintln!("{}: sentence {}: no model answer", loaded.locate(s.id()), s.id());
                        return s.clone().with_mwes(Vec::new());
                    };
                    let parsed = parse_llm_output(output, s);
                    for d in &parsed.diagnostics {
                        warnings
                            .entry(*line)
                            .or_default()
                            .push(format!("{name}:{line}: sentence {}: answer {d}", s.id()));
                    }
                    s.clone().with_mwes(parsed.instances)
                })
                .map_err(|e| CliError::Data(e.to_string()))?;
            for w in warnings.into_values().flatten() {
                eprintln!("{w}");
            }
            emit_corpus(&corpus, out.output.as_ref())
        }
    }
}
