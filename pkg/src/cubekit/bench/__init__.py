"""Star Schema Benchmark tooling: data generation, loading, baselines and the timing harness."""

QUERIES = ("1.1", "1.2", "1.3", "2.1", "2.2", "2.3", "3.1", "3.2", "3.3", "3.4", "4.1", "4.2", "4.3")
IMPLS = ("engine", "jff", "jdf", "sqlj")
