# %% [markdown]
# # Supplementary: a smaller glue exponent
#
# The glue-region error scales like t^(4a-2).  Taking k = 6 (the largest
# order built) and a = 1/9 predicts an exponent near -1.56.  The measured
# value is about -1.51, which confirms the scaling and shows that a -1.6
# gate needs a < 0.1 and hence more cap terms than are built here.

# %%
from kahlerflow import experiments as ex
from kahlerflow.evolve import SolverConfig

res = ex.theorem2_experiment(k=6, a=1 / 9, T=1e3, t_end=1e5, config=SolverConfig())
print("exponent", res.metrics["exponent"], "prediction", 4 / 9 - 2)
