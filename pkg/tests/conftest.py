import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "workbench",
    max_examples=60,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("workbench")


@pytest.fixture(scope="session")
def lenet_cell():
    """LeNet-5* compiled and retargeted across the ladder, shared between
    test modules (retargeting is cheap, simulating is not; tests that need
    runs do their own)."""
    from rvfuse.isa import Variant
    from rvfuse.rewriter import retarget
    from rvfuse.workloads import DEFAULT_SEED, codegen, lenet5_star, random_tensors

    spec = lenet5_star()
    inp, weights = random_tensors(spec, DEFAULT_SEED)
    base = codegen(spec, inp, weights)
    ladder = {}
    stats = {}
    for v in Variant:
        ladder[v], stats[v] = retarget(base, v)
    return spec, inp, weights, base, ladder, stats
