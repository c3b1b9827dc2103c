//! Reference plan listings, stored as text under `tests/fixtures/plans`.

/// Initial plan of the single-document path query.
pub const BOOK_INITIAL: &str = include_str!("../../tests/fixtures/plans/book_initial.plan");
/// Both sort ASSIGNs removed.
pub const BOOK_SORTS_REMOVED: &str = include_str!("../../tests/fixtures/plans/book_sorts_removed.plan");
/// Upper SUBPLAN replaced by ASSIGN child.
pub const BOOK_ONE_SUBPLAN_REMOVED: &str = include_str!("../../tests/fixtures/plans/book_one_subplan_removed.plan");
/// Both SUBPLANs replaced.
pub const BOOK_SUBPLANS_REMOVED: &str = include_str!("../../tests/fixtures/plans/book_subplans_removed.plan");
/// child ASSIGNs folded into unnesting UNNESTs.
pub const BOOK_UNNESTING: &str = include_str!("../../tests/fixtures/plans/book_unnesting.plan");
/// The two child UNNESTs merged.
pub const BOOK_COMBINED: &str = include_str!("../../tests/fixtures/plans/book_combined.plan");
/// Collection variant after the path rules.
pub const BOOKS_AFTER_PATH_RULES: &str = include_str!("../../tests/fixtures/plans/books_after_path_rules.plan");
/// UNNEST iterate over ASSIGN collection replaced by DATASCAN.
pub const BOOKS_DATASCAN: &str = include_str!("../../tests/fixtures/plans/books_datascan.plan");
/// Child path pushed into the DATASCAN.
pub const BOOKS_DATASCAN_PATH: &str = include_str!("../../tests/fixtures/plans/books_datascan_path.plan");
/// Count query with the scalar count over a collected sequence.
pub const BOOKS_COUNT_SCALAR: &str = include_str!("../../tests/fixtures/plans/books_count_scalar.plan");
/// Count moved into the AGGREGATE.
pub const BOOKS_COUNT_AGGREGATE: &str = include_str!("../../tests/fixtures/plans/books_count_aggregate.plan");
/// Two-collection join query before the join rules.
pub const BOOKS_JOIN_SELECT: &str = include_str!("../../tests/fixtures/plans/books_join_select.plan");
/// Two-branch JOIN plan.
pub const BOOKS_JOIN: &str = include_str!("../../tests/fixtures/plans/books_join.plan");

/// Every listing with its file stem.
pub const ALL: [(&str, &str); 13] = [
    ("book_initial", BOOK_INITIAL),
    ("book_sorts_removed", BOOK_SORTS_REMOVED),
    ("book_one_subplan_removed", BOOK_ONE_SUBPLAN_REMOVED),
    ("book_subplans_removed", BOOK_SUBPLANS_REMOVED),
    ("book_unnesting", BOOK_UNNESTING),
    ("book_combined", BOOK_COMBINED),
    ("books_after_path_rules", BOOKS_AFTER_PATH_RULES),
    ("books_datascan", BOOKS_DATASCAN),
    ("books_datascan_path", BOOKS_DATASCAN_PATH),
    ("books_count_scalar", BOOKS_COUNT_SCALAR),
    ("books_count_aggregate", BOOKS_COUNT_AGGREGATE),
    ("books_join_select", BOOKS_JOIN_SELECT),
    ("books_join", BOOKS_JOIN),
];
