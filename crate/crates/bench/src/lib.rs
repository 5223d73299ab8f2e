//! Synthetic inputs for the benchmarks.

use dbroute::reasoner::PhraseMapping;
use dbroute::schema::{ColumnMeta, DatabaseSchema, SchemaGraph, TableMeta};
use dbroute::scoring::mapping_from_refs;
use dbroute::ColumnRef;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "student",
    "course",
    "teacher",
    "flight",
    "airport",
    "airline",
    "song",
    "artist",
    "album",
    "book",
    "author",
    "publisher",
    "customer",
    "order",
    "product",
    "price",
    "city",
    "country",
    "team",
    "player",
    "match",
    "movie",
    "actor",
    "director",
    "hospital",
    "doctor",
    "patient",
    "school",
    "exam",
    "grade",
];

fn word(rng: &mut ChaCha8Rng) -> &'static str {
    WORDS[rng.gen_range(0..WORDS.len())]
}

/// A schema with `tables` tables of four columns each, chained by keys.
pub fn synthetic_schema(db_id: &str, tables: usize, rng: &mut ChaCha8Rng) -> DatabaseSchema {
    let tables = (0..tables)
        .map(|t| {
            let name = format!("{}_{t}", word(rng));
            let mut cols = vec![ColumnMeta::new(format!("{name}_id"), "INTEGER")];
            for c in 0..3 {
                cols.push(ColumnMeta::new(format!("{}_{c}", word(rng)), "TEXT"));
            }
            let mut table = TableMeta::new(name, cols);
            table.primary_key = vec![0];
            table
        })
        .collect();
    DatabaseSchema::new(db_id, tables).expect("synthetic schema is valid")
}

pub fn synthetic_repository(
    dbs: usize,
    tables: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<DatabaseSchema> {
    (0..dbs)
        .map(|i| synthetic_schema(&format!("db_{i:03}"), tables, rng))
        .collect()
}

/// A random graph with roughly `density * n * (n-1) / 2` edges.
pub fn random_graph(n: usize, density: f64, rng: &mut ChaCha8Rng) -> SchemaGraph {
    let mut g = SchemaGraph::new("bench", n);
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.gen_bool(density) {
                g.add_edge(a, b).expect("indices in range");
            }
        }
    }
    g
}

/// `phrases` mappings with up to `candidates` random columns each.
pub fn random_mappings(
    schema: &DatabaseSchema,
    phrases: usize,
    candidates: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<PhraseMapping> {
    (0..phrases)
        .map(|p| {
            let refs: Vec<ColumnRef> = (0..rng.gen_range(1..=candidates))
                .map(|_| {
                    let t = rng.gen_range(0..schema.tables.len());
                    ColumnRef::new(t, rng.gen_range(0..schema.tables[t].columns.len()))
                })
                .collect();
            mapping_from_refs(schema, &format!("phrase{p}"), &refs)
        })
        .collect()
}
