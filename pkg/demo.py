import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "adaptive_greedy.settings")
django.setup()
from adaptive_greedy_app.experiments import run_experiment
from adaptive_greedy_app.instances import MatchmakingSpec, make_matchmaking
from adaptive_greedy_app.policies import PolicyConfig, execute_policy
from adaptive_greedy_app.stochastic_model import sample_realization

if __name__ == "__main__":
    instance = make_matchmaking(MatchmakingSpec(2, 2, 1, 1, 0.5))
    config = PolicyConfig()

    for seed in range(3):
        phi = sample_realization(instance.model, seed)
        trace = execute_policy(instance.model, instance.objective, instance.system, config, phi)
        print(f"world {seed}: {trace.describe(instance.model)}")

    result = run_experiment(instance, config, with_oracle=True)
    print(
        f"greedy {result.policy_value:.4f} vs optimum {result.opt_adaptive:.4f} "
        f"(ratio {result.ratio:.4f}, bound 1/(p+1) = {result.bound:.4f})"
    )
