//! Batched, multi-threaded aggregation.
//!
//! The input is cut into fixed-size batches in stream order. Each batch is
//! folded into its own [`PartialAggregate`] and the partials are merged in
//! batch order, so the result depends only on the batch size, never on the
//! worker count or on thread scheduling.

use std::collections::BTreeMap;
use std::thread;

use collabweight_core::{AnalysisSpec, Aggregator, Context, PartialAggregate, Publication};

pub const DEFAULT_BATCH: usize = 2048;

fn fold_batch(batch: &[Publication], spec: &AnalysisSpec, ctx: &Context<'_>) -> PartialAggregate {
    let mut agg = Aggregator::new(ctx, spec.clone());
    for p in batch {
        agg.push(p);
    }
    agg.finish()
}

fn merge_in_order(acc: PartialAggregate, part: PartialAggregate) -> PartialAggregate {
    acc.merge(part).expect("batches share one spec")
}

/// Aggregate a publication stream with `workers` threads.
///
/// Batches are handed to workers through a bounded queue, so at most a few
/// batches per worker are in memory at once.
pub fn aggregate_stream<I>(
    publications: I,
    spec: &AnalysisSpec,
    ctx: &Context<'_>,
    workers: usize,
    batch_size: usize,
) -> PartialAggregate
where
    I: Iterator<Item = Publication>,
{
    let batch_size = batch_size.max(1);
    let mut publications = publications.peekable();
    let mut next_batch = move || {
        publications.peek()?;
        Some(publications.by_ref().take(batch_size).collect::<Vec<_>>())
    };

    if workers <= 1 {
        let mut acc = PartialAggregate::empty(spec.clone());
        while let Some(batch) = next_batch() {
            acc = merge_in_order(acc, fold_batch(&batch, spec, ctx));
        }
        return acc;
    }

    let (batch_tx, batch_rx) = crossbeam_channel::bounded::<(usize, Vec<Publication>)>(workers * 2);
    let (part_tx, part_rx) = crossbeam_channel::unbounded::<(usize, PartialAggregate)>();
    thread::scope(|s| {
        for _ in 0..workers {
            let batch_rx = batch_rx.clone();
            let part_tx = part_tx.clone();
            s.spawn(move || {
                for (idx, batch) in batch_rx {
                    let part = fold_batch(&batch, spec, ctx);
                    if part_tx.send((idx, part)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(batch_rx);
        drop(part_tx);

        let collector = s.spawn(move || {
            let mut acc = PartialAggregate::empty(spec.clone());
            let mut pending = BTreeMap::new();
            let mut want = 0usize;
            for (idx, part) in part_rx {
                pending.insert(idx, part);
                while let Some(part) = pending.remove(&want) {
                    acc = merge_in_order(acc, part);
                    want += 1;
                }
            }
            debug_assert!(pending.is_empty());
            acc
        });

        let mut idx = 0;
        while let Some(batch) = next_batch() {
            if batch_tx.send((idx, batch)).is_err() {
                break;
            }
            idx += 1;
        }
        drop(batch_tx);
        collector.join().expect("collector thread panicked")
    })
}

/// In-memory variant of [`aggregate_stream`]; identical batching, no copies.
pub fn aggregate_slice(
    publications: &[Publication],
    spec: &AnalysisSpec,
    ctx: &Context<'_>,
    workers: usize,
    batch_size: usize,
) -> PartialAggregate {
    let batch_size = batch_size.max(1);
    let batches: Vec<&[Publication]> = publications.chunks(batch_size).collect();
    if workers <= 1 || batches.len() <= 1 {
        return batches
            .iter()
            .map(|b| fold_batch(b, spec, ctx))
            .fold(PartialAggregate::empty(spec.clone()), merge_in_order);
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut parts: Vec<(usize, PartialAggregate)> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers.min(batches.len()))
            .map(|_| {
                s.spawn(|| {
                    let mut mine = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        let Some(batch) = batches.get(i) else { break };
                        mine.push((i, fold_batch(batch, spec, ctx)));
                    }
                    mine
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread panicked"))
            .collect()
    });
    parts.sort_by_key(|(i, _)| *i);
    parts
        .into_iter()
        .map(|(_, p)| p)
        .fold(PartialAggregate::empty(spec.clone()), merge_in_order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};
    use collabweight_core::GroupBy;

    #[test]
    fn worker_count_does_not_change_result() {
        let corpus = generate(&SynthConfig {
            publications: 3000,
            orgs: 80,
            countries: 20,
            ..SynthConfig::default()
        });
        let ctx = Context::new(&corpus.registry, &corpus.classes);
        for group_by in [GroupBy::Income, GroupBy::Institution, GroupBy::SdgCode] {
            let spec = AnalysisSpec::new(2010, 2020, group_by).unwrap();
            let one = aggregate_slice(&corpus.publications, &spec, &ctx, 1, 256);
            for workers in [2, 3, 8] {
                let many = aggregate_slice(&corpus.publications, &spec, &ctx, workers, 256);
                assert_eq!(many, one);
                let streamed = aggregate_stream(corpus.publications.iter().cloned(), &spec, &ctx, workers, 256);
                assert_eq!(streamed, one);
            }
            let single = collabweight_core::aggregate(&corpus.publications, &spec, &ctx);
            assert!(single.table.max_rel_diff(&one.table) <= 1e-9);
            assert_eq!(single.skips, one.skips);
        }
    }

    #[test]
    fn empty_input() {
        let corpus = generate(&SynthConfig {
            publications: 0,
            ..SynthConfig::default()
        });
        let ctx = Context::new(&corpus.registry, &corpus.classes);
        let spec = AnalysisSpec::new(2010, 2020, GroupBy::Income).unwrap();
        assert!(aggregate_stream(std::iter::empty(), &spec, &ctx, 4, 16).table.is_empty());
        assert!(aggregate_slice(&[], &spec, &ctx, 4, 16).table.is_empty());
    }
}
