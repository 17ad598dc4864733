# %% [markdown]
# # Training on a synthetic corpus
#
# The generator builds sentences from a 200-word language with person and
# location entities.  Some capitalized words are ambiguous and only the
# left context ("dr", "in", ...) tells the two types apart.

# %%
from nertagger.evaluation import f1_score
from nertagger.synthetic import toy_splits
from nertagger.trainer import TrainConfig, predict, train

train_set, dev_set, test_set = toy_splits(n_train=150, n_dev=40, n_test=40, seed=0)
for s in train_set[:3]:
    print(" ".join(f"{w}/{y}" for w, y in zip(s.tokens, s.labels)))

# %% [markdown]
# Small dimensions keep this quick.  The COMBINED regularizer setting is
# `beta=1, eta=0.01, zc=zh=0.15`.

# %%
config = TrainConfig(hidden=16, word_dim=16, char_dim=8, char_hidden=8, epochs=6, patience=3,
                     beta=1.0, eta=0.01, zc=0.15, zh=0.15)
checkpoint = train(config, train_set, dev_set, log=print)

# %%
gold = [s.labels for s in test_set]
report = f1_score(gold, predict(checkpoint, test_set))
print(report.format_text())
