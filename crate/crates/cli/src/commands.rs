//! Subcommand implementations. Each writes its report to `out` and saves
//! the session when it changed anything.

use std::io::Write;
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use augdict::adv::AdvSource;
use augdict::featurize::NormalizeMethod;
use augdict::pipeline::{compare_paths_with, PathReport};
use augdict::synth::{mixed_request, mixed_table};
use augdict::{
    materialize, packed_bit_width, parse_predicate, Adv, AggregateKind, ColumnTable, ColumnType,
    CompiledSpec, EmbeddingTable, Execution, FeatureItem, FeatureRequest, FeatureSpec, LearnedMapping, Value,
};
use serde::Deserialize;

use crate::catalog::{Entry, LoadRecord, Session};
use crate::error::{parse_error, CliError};
use crate::ingest;
use crate::{AddArgs, BenchArgs, Format, Kind};

const REFERENCE_CARDINALITIES: [u64; 11] = [2, 4, 5, 12, 50, 150, 195, 366, 999, 99_999, 524_288];

/// Prints rows as left-aligned columns separated by two spaces.
fn print_table(out: &mut dyn Write, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(cell);
            s.extend(std::iter::repeat_n(' ', w - cell.chars().count()));
        }
        s.trim_end().to_owned()
    };
    writeln!(out, "{}", line(header.to_vec()))?;
    for r in rows {
        writeln!(out, "{}", line(r.iter().map(String::as_str).collect()))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn load(
    dir: &Path,
    name: &str,
    data: &Path,
    schema_path: &Path,
    format: Option<Format>,
    imcu_rows: usize,
    replace: bool,
    out: &mut dyn Write,
) -> Result<()> {
    let mut session = Session::open(dir)?;
    if session.contains(name) && !replace {
        return Err(CliError::TableExists(name.to_owned()).into());
    }
    let schema = ingest::read_schema(schema_path)?;
    let format = format.unwrap_or(match data.extension().and_then(|e| e.to_str()) {
        Some("jsonl" | "ndjson") => Format::Jsonl,
        _ => Format::Csv,
    });
    let input = ingest::open(data)?;
    let rows = match format {
        Format::Csv => ingest::read_csv(input, &schema),
        Format::Jsonl => ingest::read_jsonl(input, &schema),
        Format::Binary => return Err(CliError::Usage("load reads csv or jsonl".into()).into()),
    }
    .with_context(|| format!("loading {}", data.display()))?;

    let mut table = ColumnTable::with_imcu_rows(schema, imcu_rows)?;
    let n = table.append_rows(rows)?;
    table.optimize_encoding()?;
    writeln!(
        out,
        "loaded {n} rows into {name} ({} IMCU{})",
        table.imcu_count(),
        if table.imcu_count() == 1 { "" } else { "s" }
    )?;
    storage_report(&table, out)?;
    session.insert(
        name,
        Entry {
            table,
            loads: vec![LoadRecord {
                path: data.display().to_string(),
                format: format!("{format:?}").to_lowercase(),
                rows: n as u64,
            }],
        },
    );
    session.save()
}

fn storage_report(table: &ColumnTable, out: &mut dyn Write) -> Result<()> {
    let rows: Vec<Vec<String>> = table
        .storage_report()
        .into_iter()
        .map(|s| {
            let compressed = s.compressed_bytes();
            vec![
                s.name,
                s.column_type.to_string(),
                s.cardinality.to_string(),
                s.packed_bits.to_string(),
                format!("{:.1}", s.theoretical_bits),
                compressed.to_string(),
                s.raw_bytes.to_string(),
                if compressed == 0 {
                    "-".into()
                } else {
                    format!("{:.2}", s.raw_bytes as f64 / compressed as f64)
                },
            ]
        })
        .collect();
    print_table(
        out,
        &[
            "column",
            "type",
            "cardinality",
            "packed_bits",
            "theoretical_bits",
            "compressed_bytes",
            "raw_bytes",
            "ratio",
        ],
        &rows,
    )
}

pub fn stats(dir: &Path, name: &str, limit: usize, out: &mut dyn Write) -> Result<()> {
    let mut session = Session::open(dir)?;
    let table = &mut session.get_mut(name)?.table;
    writeln!(
        out,
        "table {name}: {} live rows ({} stored), {} IMCUs",
        table.live_row_count(),
        table.row_count(),
        table.imcu_count()
    )?;
    let columns: Vec<(String, ColumnType)> = table.schema().clone();
    for (col, ty) in &columns {
        let dict = table.dictionary(col)?;
        let width = packed_bit_width(dict.len().max(1) as u64)?;
        writeln!(out, "column {col} ({ty})")?;
        writeln!(
            out,
            "  cardinality {} ({} live), packed bits {}, theoretical {:.1}",
            dict.len(),
            dict.live_entries().count(),
            width.bits,
            width.theoretical_bits
        )?;
        let show = |v: Option<&Value>| v.map_or("-".to_owned(), Value::to_string);
        writeln!(out, "  min {}  max {}", show(dict.min()), show(dict.max()))?;
        if ty.is_numeric() && dict.total_live_rows() > 0 {
            let agg = |k| table.aggregate(col, k).map(|a| a.scalar().unwrap_or(f64::NAN));
            writeln!(
                out,
                "  sum {}  mean {}  std {}",
                agg(AggregateKind::Sum)?,
                agg(AggregateKind::Mean)?,
                agg(AggregateKind::StdDev)?
            )?;
        }
        let hist: Vec<(String, u64)> = dict
            .live_entries()
            .map(|e| (e.value.to_string(), e.count))
            .collect();
        writeln!(out, "  histogram:")?;
        let shown = if limit == 0 {
            hist.len()
        } else {
            limit.min(hist.len())
        };
        for (v, c) in &hist[..shown] {
            writeln!(out, "    {v}  {c}")?;
        }
        if shown < hist.len() {
            writeln!(out, "    ... {} more", hist.len() - shown)?;
        }
        let advs: Vec<String> = table
            .column(col)?
            .advs()
            .iter()
            .map(|a| a.name().to_owned())
            .collect();
        if advs.is_empty() {
            writeln!(out, "  advs: none")?;
            continue;
        }
        writeln!(out, "  advs:")?;
        for a in advs {
            let adv = table.adv(col, &a)?.clone();
            let stats = stats_cells(table, col, &a)?;
            writeln!(
                out,
                "    {a}  {}  width {}  entropy {}  diversity {}",
                describe(&adv),
                adv.width(),
                stats.0,
                stats.1
            )?;
        }
    }
    session.save()
}

/// Entropy and diversity as printed, refreshing stale statistics.
fn stats_cells(table: &mut ColumnTable, col: &str, adv: &str) -> Result<(String, String)> {
    if table.dictionary(col)?.total_live_rows() == 0 {
        return Ok(("-".into(), "-".into()));
    }
    let s = table.adv_stats(col, adv)?;
    Ok((format!("{:.6}", s.entropy), format!("{:.6}", s.diversity)))
}

fn describe(adv: &Adv) -> String {
    match adv.source() {
        AdvSource::Learned { mapping } => format!(
            "learned ({} pairs, default {}, from {})",
            mapping.pairs().len(),
            adv.default_output(),
            mapping.provenance()
        ),
        AdvSource::Spec { spec } => match spec {
            CompiledSpec::Float => "float".into(),
            CompiledSpec::OneHot => "one_hot".into(),
            CompiledSpec::Embedding { table } => format!("embedding ({} x {})", table.rows(), table.dim()),
            CompiledSpec::Normalize { method, .. } => match method {
                NormalizeMethod::MinMaxScale => "min_max_scale",
                NormalizeMethod::MeanNormalize => "mean_normalize",
                NormalizeMethod::ZScore => "z_score",
                NormalizeMethod::LogScale => "log_scale",
            }
            .into(),
            CompiledSpec::Threshold { cutoff, scale: None } => format!("binarize (>= {cutoff})"),
            CompiledSpec::Threshold {
                cutoff,
                scale: Some(s),
            } => {
                format!("binarize (logistic at {cutoff}, scale {s})")
            }
            CompiledSpec::Equals { target } => format!("binarize (= {target})"),
            CompiledSpec::Quantile { n_quantiles, lo, hi } => {
                format!("quantile ({n_quantiles} over [{lo}, {hi}])")
            }
            CompiledSpec::HashBucket { n_buckets } => format!("hash_bucket ({n_buckets})"),
            CompiledSpec::Bucketize { boundaries } => {
                let n = match boundaries {
                    augdict::featurize::Boundaries::Numeric(b) => b.len(),
                    augdict::featurize::Boundaries::Text(b) => b.len(),
                };
                format!("bucketize ({n} boundaries)")
            }
        },
    }
}

pub fn query(dir: &Path, name: &str, text: &str, limit: usize, out: &mut dyn Write) -> Result<()> {
    let session = Session::open(dir)?;
    let table = &session.get(name)?.table;
    let predicate = parse_predicate(text, table.schema())?;
    let r = table.scan(&predicate)?;
    let s = r.stats;
    writeln!(out, "{} rows match", r.rows.len())?;
    writeln!(
        out,
        "IMCUs: {} total, {} scanned, {} pruned{}",
        s.imcus_total,
        s.imcus_scanned,
        s.imcus_pruned,
        if s.short_circuit {
            " (no dictionary entry qualifies)"
        } else {
            ""
        }
    )?;
    if r.rows.is_empty() || limit == 0 {
        return Ok(());
    }
    {
        let mut w = csv::Writer::from_writer(&mut *out);
        w.write_record(table.schema().iter().map(|(n, _)| n.as_str()))?;
        for &row in r.rows.iter().take(limit) {
            w.write_record(table.row(row)?.iter().map(Value::to_string))?;
        }
        w.flush()?;
    }
    if r.rows.len() > limit {
        writeln!(out, "... {} more rows", r.rows.len() - limit)?;
    }
    Ok(())
}

/// Parses a comma-separated list. `a,b,...,z` expands the arithmetic
/// progression from `a` with step `b - a` through `z`.
pub fn parse_list(text: &str, ty: ColumnType) -> Result<Vec<Value>, CliError> {
    let items: Vec<&str> = text.split(',').map(str::trim).collect();
    let usage = |m: String| CliError::Usage(m);
    let Some(dots) = items.iter().position(|t| *t == "...") else {
        return items
            .iter()
            .map(|t| list_value(t, ty).ok_or_else(|| usage(format!("bad list item {t:?} for a {ty} column"))))
            .collect();
    };
    if !ty.is_numeric() || dots < 2 || dots + 2 != items.len() {
        return Err(usage("use a,b,...,z with numeric items".into()));
    }
    let head = items[..dots]
        .iter()
        .map(|t| list_value(t, ty).ok_or_else(|| usage(format!("bad list item {t:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let end = list_value(items[dots + 1], ty)
        .ok_or_else(|| usage(format!("bad list item {:?}", items[dots + 1])))?;
    let mut out = head.clone();
    match (&head[dots - 2], &head[dots - 1], &end) {
        (Value::Int(a), Value::Int(b), Value::Int(z)) => {
            let step = b - a;
            if step <= 0 || (z - b) % step != 0 || z < b {
                return Err(usage(format!("{z} is not reached from {b} in steps of {step}")));
            }
            out.extend((1..=(z - b) / step).map(|k| Value::Int(b + k * step)));
        }
        (a, b, z) => {
            let (a, b, z) = (a.as_f64().unwrap(), b.as_f64().unwrap(), z.as_f64().unwrap());
            let step = b - a;
            let k = (z - b) / step;
            if step <= 0.0 || k < 0.0 || (k - k.round()).abs() > 1e-9 {
                return Err(usage(format!("{z} is not reached from {b} in steps of {step}")));
            }
            let k = k.round() as i64;
            out.extend((1..k).map(|i| Value::Float(b + i as f64 * step)));
            out.push(Value::Float(z));
        }
    }
    Ok(out)
}

fn list_value(t: &str, ty: ColumnType) -> Option<Value> {
    match ty {
        ColumnType::CategoricalString => Some(Value::str(t)),
        _ => t
            .parse::<i64>()
            .map(Value::Int)
            .ok()
            .or_else(|| t.parse::<f64>().ok().and_then(|x| Value::float(x).ok())),
    }
}

fn build_spec(args: &AddArgs, table: &ColumnTable) -> Result<FeatureSpec> {
    let ty = table.column(&args.column)?.column_type();
    let kind = match (args.kind, &args.boundaries) {
        (Some(k), _) => k,
        (None, Some(_)) => Kind::Bucketize,
        (None, None) => {
            return Err(CliError::Usage("--kind is required unless --boundaries is given".into()).into())
        }
    };
    if args.boundaries.is_some() && kind != Kind::Bucketize {
        return Err(CliError::Usage("--boundaries only applies to bucketize".into()).into());
    }
    let missing = |flag: &str| CliError::Usage(format!("{flag} is required for this kind"));
    Ok(match kind {
        Kind::Float => FeatureSpec::Float,
        Kind::OneHot => FeatureSpec::OneHot,
        Kind::MinMax => FeatureSpec::MinMaxScale,
        Kind::MeanNormalize => FeatureSpec::MeanNormalize,
        Kind::ZScore => FeatureSpec::ZScore,
        Kind::Log => FeatureSpec::LogScale,
        Kind::Quantile => FeatureSpec::Quantile {
            n_quantiles: args.quantiles.ok_or_else(|| missing("--quantiles"))?,
        },
        Kind::HashBucket => FeatureSpec::HashBucket {
            n_buckets: args.buckets.ok_or_else(|| missing("--buckets"))?,
        },
        Kind::Bucketize => FeatureSpec::Bucketize {
            boundaries: parse_list(
                args.boundaries
                    .as_deref()
                    .ok_or_else(|| missing("--boundaries"))?,
                ty,
            )?,
        },
        Kind::Binarize => {
            let text = args.cutoff.as_deref().ok_or_else(|| missing("--cutoff"))?;
            let cutoff =
                list_value(text, ty).ok_or_else(|| CliError::Usage(format!("bad cutoff {text:?}")))?;
            FeatureSpec::Binarize {
                cutoff,
                scale: args.scale,
            }
        }
        Kind::Embedding => {
            let table = match (&args.embedding, args.dim) {
                (Some(path), None) => read_embedding(path)?,
                (None, Some(dim)) => {
                    EmbeddingTable::seeded(table.dictionary(&args.column)?.len(), dim, args.seed)?
                }
                _ => {
                    return Err(
                        CliError::Usage("embedding needs exactly one of --embedding or --dim".into()).into(),
                    )
                }
            };
            FeatureSpec::Embedding { table }
        }
    })
}

fn read_embedding(path: &Path) -> Result<EmbeddingTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(ingest::open(path)?);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f32>()
                    .map_err(|_| parse_error(line, format!("bad float {f:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(EmbeddingTable::from_rows(&rows)?)
}

pub fn adv_add(dir: &Path, args: &AddArgs, out: &mut dyn Write) -> Result<()> {
    let mut session = Session::open(dir)?;
    let table = &mut session.get_mut(&args.table)?.table;
    let spec = build_spec(args, table)?;
    let adv = table.register_adv(&args.column, &args.name, &spec)?.clone();
    let (h, d) = stats_cells(table, &args.column, &args.name)?;
    writeln!(
        out,
        "registered {}.{}.{}: {}, {} slots, entropy {h}, diversity {d}",
        args.table,
        args.column,
        args.name,
        describe(&adv),
        adv.len()
    )?;
    session.save()
}

fn read_mapping(path: &Path, ty: ColumnType) -> Result<Vec<(Value, f32)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(ingest::open(path)?);
    if rdr.headers()?.len() != 2 {
        bail!(CliError::SchemaMismatch(
            "mapping file needs two columns: value,output".into()
        ));
    }
    let mut pairs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let value = Value::parse(&rec[0], ty).map_err(|e| parse_error(line, e.to_string()))?;
        let output: f32 = rec[1]
            .trim()
            .parse()
            .map_err(|_| parse_error(line, format!("bad output {:?}", &rec[1])))?;
        pairs.push((value, output));
    }
    Ok(pairs)
}

#[allow(clippy::too_many_arguments)]
pub fn adv_import(
    dir: &Path,
    name: &str,
    column: &str,
    adv: &str,
    mapping: &Path,
    default: f32,
    provenance: Option<String>,
    out: &mut dyn Write,
) -> Result<()> {
    let mut session = Session::open(dir)?;
    let table = &mut session.get_mut(name)?.table;
    let ty = table.column(column)?.column_type();
    let pairs = read_mapping(mapping, ty).with_context(|| format!("reading {}", mapping.display()))?;
    let provenance = provenance.unwrap_or_else(|| mapping.display().to_string());
    let m = LearnedMapping::new(pairs, provenance)?;
    let covered = table
        .dictionary(column)?
        .entries()
        .iter()
        .filter(|e| m.get(&e.value).is_some())
        .count();
    let card = table.dictionary(column)?.len();
    table.import_learned_mapping(column, adv, &m, default)?;
    writeln!(
        out,
        "imported {} pairs as {name}.{column}.{adv}; {covered} of {card} dictionary entries mapped, default {default}",
        m.pairs().len()
    )?;
    session.save()
}

pub fn adv_list(dir: &Path, name: &str, out: &mut dyn Write) -> Result<()> {
    let mut session = Session::open(dir)?;
    let table = &mut session.get_mut(name)?.table;
    let mut rows = Vec::new();
    let names: Vec<(String, String)> = table
        .columns()
        .iter()
        .flat_map(|c| {
            c.advs()
                .iter()
                .map(|a| (c.name().to_owned(), a.name().to_owned()))
        })
        .collect();
    for (col, a) in names {
        let adv = table.adv(&col, &a)?.clone();
        let (h, d) = stats_cells(table, &col, &a)?;
        rows.push(vec![
            col,
            a,
            describe(&adv),
            adv.width().to_string(),
            adv.len().to_string(),
            h,
            d,
        ]);
    }
    if rows.is_empty() {
        writeln!(out, "no ADVs on {name}")?;
        return Ok(());
    }
    print_table(
        out,
        &[
            "column",
            "adv",
            "source",
            "width",
            "slots",
            "entropy",
            "diversity",
        ],
        &rows,
    )?;
    session.save()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RequestFile {
    #[serde(default, rename = "where")]
    filter: Option<String>,
    features: Vec<FeatureItem>,
}

fn read_request(path: &Path, table: &ColumnTable) -> Result<FeatureRequest> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: RequestFile =
        serde_json::from_str(&text).with_context(|| format!("decoding {}", path.display()))?;
    let mut req = FeatureRequest::new(file.features);
    if let Some(w) = file.filter {
        req = req.filtered(parse_predicate(&w, table.schema())?);
    }
    Ok(req)
}

pub fn featurize(
    dir: &Path,
    name: &str,
    request: &Path,
    path: Option<&Path>,
    format: Format,
    out: &mut dyn Write,
) -> Result<()> {
    let session = Session::open(dir)?;
    let table = &session.get(name)?.table;
    let req = read_request(request, table)?;
    let m = materialize(table, &req)?;
    let bytes = match (format, path) {
        (Format::Csv, None) => {
            m.write_csv(&mut *out)?;
            return Ok(());
        }
        (Format::Csv, Some(p)) => m.export_csv(p)?,
        (Format::Binary, Some(p)) => m.export_binary(p)?,
        (Format::Binary, None) => return Err(CliError::Usage("binary output needs --out".into()).into()),
        (Format::Jsonl, _) => return Err(CliError::Usage("featurize writes csv or binary".into()).into()),
    };
    writeln!(
        out,
        "wrote {} x {} matrix to {} ({bytes} bytes, {})",
        m.n_rows(),
        m.n_cols(),
        path.unwrap().display(),
        format!("{format:?}").to_lowercase()
    )?;
    Ok(())
}

fn ms(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1e3)
}

pub fn bench(dir: &Path, args: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let owned;
    let (table, req, label) = match (&args.table, &args.request) {
        (Some(name), Some(request)) => {
            let session = Session::open(dir)?;
            owned = session.get(name)?.table.clone();
            let req = read_request(request, &owned)?;
            (&owned, req, format!("table {name}"))
        }
        _ => {
            let mut t = mixed_table(args.rows, args.seed, augdict::store::IMCU_ROWS)?;
            let req = mixed_request(&mut t, args.seed)?;
            owned = t;
            (&owned, req, format!("synthetic, seed {}", args.seed))
        }
    };
    let mut modes = vec![Execution::Sequential];
    if Execution::available() {
        modes.insert(0, Execution::Parallel);
    }
    let mut rows = Vec::new();
    let mut shape = (0, 0);
    for exec in modes {
        let r: PathReport = compare_paths_with(table, &req, exec)?;
        shape = (r.n_rows, r.n_cols);
        rows.push(vec![
            format!("{exec:?}").to_lowercase(),
            ms(r.adv_path.elapsed),
            ms(r.raw_path.elapsed),
            format!("{:.2}x", r.speedup()),
            r.adv_path.bytes_touched.to_string(),
            r.raw_path.bytes_touched.to_string(),
        ]);
    }
    writeln!(
        out,
        "bench ({label}): {} rows x {} feature columns",
        shape.0, shape.1
    )?;
    print_table(
        out,
        &[
            "execution",
            "adv_ms",
            "raw_ms",
            "speedup",
            "adv_bytes",
            "raw_bytes",
        ],
        &rows,
    )?;
    writeln!(out, "outputs bit-identical: yes (timings are informational)")?;
    Ok(())
}

pub fn widths(cardinalities: &[u64], out: &mut dyn Write) -> Result<()> {
    let list = if cardinalities.is_empty() {
        &REFERENCE_CARDINALITIES[..]
    } else {
        cardinalities
    };
    let rows = list
        .iter()
        .map(|&c| {
            let w = packed_bit_width(c)?;
            Ok(vec![c.to_string(), w.theoretical_display(), w.bits.to_string()])
        })
        .collect::<Result<Vec<_>>>()?;
    print_table(out, &["cardinality", "theoretical_bits", "packed_bits"], &rows)
}
