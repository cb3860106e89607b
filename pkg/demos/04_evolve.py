"""
A short evolutionary run
========================

NSGA-II with mutation only, on a small population, at the full 14.8 V
supply. Every offspring stays under the speed cap because infeasible
children are mutated again from their parent.
"""
from quadevo import genome, nsga2, simbench

cfg = nsga2.EvoConfig(population=6, generations=4)
ecfg = simbench.EvalConfig(voltage=14.8)


def evaluator(genes, eval_seed):
    return simbench.evaluate(genome.decode(genes), None, ecfg.with_(seed=eval_seed))


history = nsga2.run(evaluator, cfg, seed=3)
print(f"{len(history.evaluated)} evaluations in {len(history.populations)} generations")

# %%
# Mutation size shrinks each round and bottoms out at 0.05.
for g in range(1, cfg.generations):
    print(f"generation {g}: sigma {history.generation(g)[0].sigma:.4f}")

# %%
# Area dominated by each surviving population (reference speed 0,
# stability -1). Elitist survival keeps it from shrinking here.
for g, pop in enumerate(history.populations):
    print(f"generation {g}: hypervolume {nsga2.hypervolume([i.fitness for i in pop]):.3f}")

for ind in sorted(history.final_population, key=lambda i: -i.fitness[0]):
    if ind.rank == 0:
        print(f"front 0: speed {ind.fitness[0]:.2f} m/min, stability {ind.fitness[1]:.4f}")
