"""Why serialize instead of querying neighbors: scaling and locality.

Curve serialization sorts once (near-linear); brute-force KNN pays a
quadratic distance matrix.  The patch sweep shows the locality knob:
smaller patches give tighter groups.
"""

from omnievent.bench import bench_patch_vs_knn, sweep_patch_sizes

print("serialization vs brute-force KNN (K = p = 256):\n")
report = bench_patch_vs_knn(sizes=(1000, 2000, 4000), K=256, p=256, seed=1)
print(report.format_table())

ser = [r.seconds for r in report.rows if r.scenario == "serialize"]
knn = [r.seconds for r in report.rows if r.scenario == "knn"]
print("\nper-doubling time ratios:")
print(f"  serialize: {[round(b / a, 2) for a, b in zip(ser, ser[1:])]}")
print(f"  knn      : {[round(b / a, 2) for a, b in zip(knn, knn[1:])]}")

print("\npatch-size sweep at n=4096 (locality of attention groups):\n")
print(sweep_patch_sizes(n=4096, sizes=(64, 256, 1024), seed=1).format_table())
print("\nsmaller patches -> tighter spatial and temporal spread per group")
