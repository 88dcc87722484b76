# %% [markdown]
# # Leaving blocked hits out
# Whether an attack gets blocked is barely visible in the contacts that come
# before it, so dropping that class makes the hit task easier.

# %%
from volleygraph.encoding import encode_dataset
from volleygraph.synth import bayes_accuracy, generate, load_profile
from volleygraph.training import TrainConfig, evaluate, format_table, split_dataset, train

reports = []
for level in ("college", "professional"):
    profile = load_profile(level)
    tr, va, te = split_dataset(generate(profile, 3000, seed=3), (0.8, 0.1, 0.1), seed=0)
    for blocked in (True, False):
        enc = lambda rs: encode_dataset(rs, "hit", blocked).graphs
        config = TrainConfig(task="hit", architecture="graph_transformer", include_blocked=blocked,
                             learning_rate=3e-3, batch_size=64, max_epochs=8, patience=3)
        ckpt, _ = train(config, enc(tr), enc(va))
        reports += evaluate(ckpt, enc(te))
        print(level, "included" if blocked else "excluded", f"bayes {100 * bayes_accuracy(profile, 'hit', blocked):.2f}%")

print(format_table(reports))
