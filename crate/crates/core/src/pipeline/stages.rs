use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Context, Stage, Workspace};
use crate::compounds::{
    build_recipes, compounding_features_from_accepted, extract_candidates, score_and_filter, SplitCandidate,
};
use crate::error::{Error, Result};
use crate::features::{
    assemble_feature_matrix, etymology_features, mean_length, pos_features, translation_concreteness,
    word_concreteness, ConcretenessLexicon, CorpusSource, CorpusSummary, EtymologyTable, Feature, FeatureColumns,
    FeatureMatrix,
};
use crate::lexicon::{load_lexicon, LexiconFormat, RoundTripRecord, SeedList, TranslationTable};
use crate::segmentation::{
    affix_presence_feature, discover_affixes, train_segmenter, Affix, AffixClass, AffixPosition, SegmentModel,
};
use crate::stats::{
    aggregate, basic_target, bootstrap_then_full_aggregate, gamma_table, rfe, sequence_target, write_gamma_csv,
    RfeResult, SequenceScope,
};
use crate::wcs::{heterogeneity_report, load_wcs};

/// Separator for back-translations inside one CSV cell.
const GLOSS_SEP: char = '|';

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub(crate) struct Imputation {
    pub dropped: Vec<String>,
    pub imputed: Vec<(String, Feature)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RfeReport {
    basic: RfeResult,
    sequence: RfeResult,
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Internal(e.to_string()))
}

fn read_csv(ws: &Workspace, name: &str) -> Result<Vec<csv::StringRecord>> {
    let bytes = ws.read(name)?;
    let mut r = csv::Reader::from_reader(&bytes[..]);
    r.records()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::invalid(format!("{name}: {e}")))
}

fn field<'r>(rec: &'r csv::StringRecord, i: usize, file: &str) -> Result<&'r str> {
    rec.get(i)
        .ok_or_else(|| Error::invalid(format!("{file}: short row {rec:?}")))
}

pub(crate) fn run(ctx: &Context, ws: &mut Workspace, stage: Stage) -> Result<usize> {
    match stage {
        Stage::Ingest => ingest(ctx, ws),
        Stage::Segment => segment(ctx, ws),
        Stage::Compounds => compounds(ctx, ws),
        Stage::Features => features(ctx, ws),
        Stage::Aggregate => aggregate_stage(ctx, ws),
        Stage::Gamma => gamma_stage(ctx, ws),
        Stage::Rfe => rfe_stage(ctx, ws),
        Stage::Wcs => wcs_stage(ctx, ws),
        Stage::Report => report(ws),
    }
}

fn lexicon(ctx: &Context) -> Result<TranslationTable> {
    let (table, report) = load_lexicon(&ctx.inputs.lexicon, LexiconFormat::Tsv)?;
    if report.skipped > 0 {
        log::warn!("lexicon: skipped {} malformed rows", report.skipped);
    }
    Ok(table)
}

fn ingest(ctx: &Context, ws: &mut Workspace) -> Result<usize> {
    let (table, report) = load_lexicon(&ctx.inputs.lexicon, LexiconFormat::Tsv)?;
    let seeds = SeedList::load(&ctx.inputs.seeds)?;
    let mut rows = Vec::new();
    let mut uncovered = Vec::new();
    for color in seeds.terms() {
        let records = table.round_trip_all(color);
        if records.is_empty() {
            uncovered.push(color.to_string());
        }
        for r in records {
            let back: Vec<&str> = r.back_translations.iter().map(String::as_str).collect();
            rows.push(vec![r.color, r.language, r.foreign, back.join(&GLOSS_SEP.to_string())]);
        }
    }
    let n = rows.len();
    ws.write(
        "translations.csv",
        &csv_bytes(&["color", "language", "foreign", "back_translations"], rows)?,
    )?;
    let summary = serde_json::json!({
        "lexicon": report,
        "languages": table.languages().count(),
        "colors": seeds.len(),
        "colors_without_translations": uncovered,
        "translation_rows": n,
    });
    ws.write("ingest.json", &json(&summary)?)?;
    Ok(n)
}

fn round_trips(ws: &Workspace) -> Result<Vec<RoundTripRecord>> {
    read_csv(ws, "translations.csv")?
        .iter()
        .map(|r| {
            let f = |i| field(r, i, "translations.csv");
            let back = f(3)?;
            Ok(RoundTripRecord {
                color: f(0)?.to_string(),
                language: f(1)?.to_string(),
                foreign: f(2)?.to_string(),
                back_translations: back
                    .split(GLOSS_SEP)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect(),
            })
        })
        .collect()
}

fn segment(ctx: &Context, ws: &mut Workspace) -> Result<usize> {
    let table = lexicon(ctx)?;
    let mut color_words: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for r in round_trips(ws)? {
        color_words.entry(r.language).or_default().insert(r.foreign);
    }
    let languages: Vec<&str> = table.languages().collect();
    let cfg = ctx.config;
    let per_language: Vec<(SegmentModel, Vec<Affix>)> = languages
        .par_iter()
        .map(|&lang| {
            let words: Vec<&str> = table.words(lang).into_iter().collect();
            let model = train_segmenter(lang, &words, &cfg.segmentation)?;
            let colors: Vec<&str> = color_words
                .get(lang)
                .map(|s| s.iter().map(String::as_str).collect())
                .unwrap_or_default();
            let affixes = discover_affixes(&model, &colors, &words, &cfg.affixes)?;
            Ok((model, affixes))
        })
        .collect::<Result<_>>()?;
    let models: Vec<&SegmentModel> = per_language.iter().map(|(m, _)| m).collect();
    ws.write("segments.json", &json(&models)?)?;
    let rows: Vec<Vec<String>> = per_language
        .iter()
        .flat_map(|(_, affixes)| affixes)
        .map(|a| {
            vec![
                a.language.clone(),
                a.form.clone(),
                a.position.to_string(),
                a.class.to_string(),
                format!("{:.6}", a.color_coverage),
                format!("{:.6}", a.global_coverage),
            ]
        })
        .collect();
    let n = rows.len();
    ws.write(
        "affixes.csv",
        &csv_bytes(
            &["language", "affix", "position", "class", "color_coverage", "global_coverage"],
            rows,
        )?,
    )?;
    Ok(n)
}

/// Suffixes usable as compound right components, per language.
fn derivational_suffixes(ws: &Workspace) -> Result<BTreeMap<String, BTreeSet<String>>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for r in read_csv(ws, "affixes.csv")? {
        let f = |i| field(&r, i, "affixes.csv");
        let position: AffixPosition = f(2)?.parse()?;
        let class: AffixClass = f(3)?.parse()?;
        if position == AffixPosition::Suffix && class != AffixClass::Neither {
            out.entry(f(0)?.to_string()).or_default().insert(f(1)?.to_string());
        }
    }
    Ok(out)
}

fn compounds(ctx: &Context, ws: &mut Workspace) -> Result<usize> {
    let table = lexicon(ctx)?;
    let suffixes = derivational_suffixes(ws)?;
    let languages: Vec<&str> = table.languages().collect();
    let none = BTreeSet::new();
    let candidates: Vec<SplitCandidate> = languages
        .par_iter()
        .map(|&lang| extract_candidates(&table, lang, suffixes.get(lang).unwrap_or(&none)))
        .collect::<Vec<_>>()
        .concat();
    let recipes = build_recipes(&candidates);
    let analyses = score_and_filter(&candidates, &recipes, ctx.config.compounds.threshold)?;
    let rows: Vec<Vec<String>> = analyses
        .iter()
        .map(|a| {
            let c = &a.candidate;
            vec![
                c.language.clone(),
                c.word.clone(),
                c.left.clone(),
                c.glue.clone(),
                c.right.clone(),
                a.recipe.left_concept.clone(),
                a.recipe.right_concept.clone(),
                a.score.to_string(),
                a.accepted.to_string(),
            ]
        })
        .collect();
    let n = rows.len();
    ws.write(
        "compounds.csv",
        &csv_bytes(
            &["language", "word", "left", "glue", "right", "left_concept", "right_concept", "support", "accepted"],
            rows,
        )?,
    )?;
    Ok(n)
}

fn accepted_compounds(ws: &Workspace) -> Result<BTreeSet<(String, String)>> {
    let mut out = BTreeSet::new();
    for r in read_csv(ws, "compounds.csv")? {
        if field(&r, 8, "compounds.csv")? == "true" {
            out.insert((field(&r, 0, "compounds.csv")?.to_string(), field(&r, 1, "compounds.csv")?.to_string()));
        }
    }
    Ok(out)
}

fn features(ctx: &Context, ws: &mut Workspace) -> Result<usize> {
    let inputs = ctx.inputs;
    let seeds = SeedList::load(&inputs.seeds)?;
    let colors: Vec<String> = seeds.terms().map(str::to_string).collect();
    let records = round_trips(ws)?;
    let mut by_color: BTreeMap<String, Vec<RoundTripRecord>> = BTreeMap::new();
    for r in records {
        by_color.entry(r.color.clone()).or_default().push(r);
    }
    let pairs: BTreeMap<String, Vec<(String, String)>> = by_color
        .iter()
        .map(|(c, rs)| (c.clone(), rs.iter().map(|r| (r.language.clone(), r.foreign.clone())).collect()))
        .collect();
    let models: BTreeMap<String, SegmentModel> = serde_json::from_slice::<Vec<SegmentModel>>(&ws.read("segments.json")?)
        .map_err(|e| Error::invalid(format!("segments.json: {e}")))?
        .into_iter()
        .map(|m| (m.language().to_string(), m))
        .collect();
    let accepted = accepted_compounds(ws)?;

    let lex = ConcretenessLexicon::load(&inputs.concreteness)?;
    let ngram = CorpusSummary::load(CorpusSource::Ngram, &inputs.ngram)?;
    let treebank = CorpusSummary::load(CorpusSource::Treebank, &inputs.treebank)?;
    let etymology = EtymologyTable::load(&inputs.etymology)?;
    let compound = compounding_features_from_accepted(&accepted, &colors, &pairs);

    let mut cols = FeatureColumns::new();
    for c in &colors {
        let rts = by_color.get(c).map(Vec::as_slice).unwrap_or_default();
        let ng = pos_features(c, &ngram);
        let ety = etymology_features(c, &etymology);
        let cf = compound.get(c).copied().flatten();
        let values = [
            (Feature::WordConcreteness, word_concreteness(c, &lex)),
            (Feature::TranslationConcreteness, translation_concreteness(rts, &lex)),
            (Feature::NgramFrequency, ng.map(|p| p.frequency as f64)),
            (Feature::NgramPctAdj, ng.and_then(|p| p.pct_adj)),
            (Feature::PenntbPctAdj, pos_features(c, &treebank).and_then(|p| p.pct_adj)),
            (Feature::CompoundCount, cf.map(|(n, _)| n as f64)),
            (Feature::CompoundFrequency, cf.map(|(_, f)| f)),
            (Feature::Borrowing, ety.map(|e| e.borrowing)),
            (Feature::Cognate, ety.map(|e| e.cognate)),
            (Feature::Derivation, ety.map(|e| e.derivation)),
            (Feature::SuffixDerivation, ety.map(|e| e.suffix_derivation)),
            (Feature::Inheritance, ety.map(|e| e.inheritance)),
            (Feature::WordLength, mean_length(rts.iter().map(|r| r.foreign.as_str()))),
        ];
        for (f, v) in values {
            cols.set(f, c, v);
        }
    }
    let matrix = assemble_feature_matrix(&cols, &colors)?;
    if !matrix.dropped().is_empty() {
        log::warn!("dropped colors with too many missing features: {}", matrix.dropped().join(", "));
    }
    let directions = ctx.config.aggregation.directions();
    let two = bootstrap_then_full_aggregate(&matrix, &directions, |boot| {
        affix_presence_feature(matrix.colors(), &pairs, &models, &boot.colors(), &ctx.config.affix_presence)
    })?;

    let mut buf = Vec::new();
    two.matrix.write_csv(&mut buf)?;
    ws.write("features.csv", &buf)?;
    let mut buf = Vec::new();
    two.bootstrap.write_csv(&mut buf)?;
    ws.write("bootstrap_ranking.csv", &buf)?;
    let imputation = Imputation {
        dropped: two.matrix.dropped().to_vec(),
        imputed: two.matrix.imputed_cells(),
    };
    ws.write("imputation.json", &json(&imputation)?)?;
    Ok(two.matrix.n_rows())
}

fn feature_matrix(ws: &Workspace) -> Result<FeatureMatrix> {
    FeatureMatrix::read_csv(&ws.read("features.csv")?[..])
}

fn aggregate_stage(ctx: &Context, ws: &mut Workspace) -> Result<usize> {
    let m = feature_matrix(ws)?;
    let ranking = aggregate(&m, &ctx.config.aggregation.directions(), m.features())?;
    let mut buf = Vec::new();
    ranking.write_csv(&mut buf)?;
    ws.write("ranking.csv", &buf)?;
    Ok(ranking.ranking.len())
}

fn gamma_stage(ctx: &Context, ws: &mut Workspace) -> Result<usize> {
    let m = feature_matrix(ws)?;
    let seeds = SeedList::load(&ctx.inputs.seeds)?;
    let directions = ctx.config.aggregation.directions();
    let ranking = aggregate(&m, &directions, m.features())?;
    let rows = gamma_table(&m, &directions, &ranking.row_scores, &seeds, ctx.config.aggregation.sequence_scope)?;
    let mut buf = Vec::new();
    write_gamma_csv(&rows, &mut buf)?;
    ws.write("gamma.csv", &buf)?;
    Ok(rows.len())
}

fn rfe_stage(ctx: &Context, ws: &mut Workspace) -> Result<usize> {
    let m = feature_matrix(ws)?;
    let seeds = SeedList::load(&ctx.inputs.seeds)?;
    let directions = ctx.config.aggregation.directions();
    let basic = rfe(&m, &basic_target(m.colors(), &seeds)?, &directions)?;
    let seq_matrix = match ctx.config.aggregation.sequence_scope {
        SequenceScope::All => m.clone(),
        SequenceScope::BasicOnly => {
            let flags = basic_target(m.colors(), &seeds)?;
            let keep: Vec<usize> = (0..m.n_rows()).filter(|&i| flags[i] == 1.0).collect();
            m.select_rows(&keep)?
        }
    };
    let sequence = rfe(&seq_matrix, &sequence_target(seq_matrix.colors(), &seeds)?, &directions)?;
    let n = basic.trajectory.len();
    ws.write("rfe.json", &json(&RfeReport { basic, sequence })?)?;
    Ok(n)
}

fn wcs_stage(ctx: &Context, ws: &mut Workspace) -> Result<usize> {
    let path = ctx
        .inputs
        .wcs
        .as_ref()
        .ok_or_else(|| Error::config("inputs.wcs", "missing"))?;
    let table = load_wcs(path)?;
    let report = heterogeneity_report(&table)?;
    let mut buf = Vec::new();
    report.write_consensus_csv(&mut buf)?;
    ws.write("consensus.csv", &buf)?;
    let mut buf = Vec::new();
    report.write_inventory_csv(&mut buf)?;
    ws.write("inventory.csv", &buf)?;
    ws.write("heterogeneity.svg", report.to_svg().as_bytes())?;
    Ok(report.languages.iter().map(|l| l.distinct_terms).sum())
}

fn markdown_table(out: &mut String, header: &[&str], rows: &[csv::StringRecord]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let cells: Vec<&str> = r.iter().collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
    out.push('\n');
}

fn report(ws: &mut Workspace) -> Result<usize> {
    let mut out = String::from("# Color basicness report\n\n");
    let ranking = read_csv(ws, "ranking.csv")?;
    out.push_str("## Aggregate ranking\n\n");
    markdown_table(&mut out, &["rank", "color", "score"], &ranking);

    out.push_str("## Gamma by feature\n\n");
    markdown_table(&mut out, &["feature", "basic", "sequence"], &read_csv(ws, "gamma.csv")?);

    if ws.path("imputation.json").is_file() {
        let imp: Imputation = serde_json::from_slice(&ws.read("imputation.json")?)
            .map_err(|e| Error::invalid(format!("imputation.json: {e}")))?;
        let _ = writeln!(
            out,
            "## Missing data\n\nDropped colors: {}. Imputed cells: {}.\n",
            if imp.dropped.is_empty() { "none".to_string() } else { imp.dropped.join(", ") },
            imp.imputed.len()
        );
    }
    if ws.path("rfe.json").is_file() {
        let r: RfeReport = serde_json::from_slice(&ws.read("rfe.json")?)
            .map_err(|e| Error::invalid(format!("rfe.json: {e}")))?;
        out.push_str("## Feature elimination\n\n");
        for (name, res) in [("basic", &r.basic), ("sequence", &r.sequence)] {
            let removed: Vec<String> = res
                .trajectory
                .iter()
                .filter_map(|s| s.removed_feature.map(|f| format!("{f} ({:.4})", s.gamma)))
                .collect();
            let kept: Vec<&str> = res.best_features.iter().map(|f| f.name()).collect();
            let _ = writeln!(
                out,
                "- {name} target: start {:.4}, removed [{}], best {:.4} with {}",
                res.trajectory[0].gamma,
                removed.join(", "),
                res.best_gamma,
                kept.join(", ")
            );
        }
        out.push('\n');
    }
    if ws.path("inventory.csv").is_file() {
        out.push_str("## Elicitation inventories\n\n");
        markdown_table(
            &mut out,
            &["language", "speakers", "distinct terms", "mean", "std"],
            &read_csv(ws, "inventory.csv")?,
        );
    }
    ws.write("report.md", out.as_bytes())?;
    Ok(ranking.len())
}
