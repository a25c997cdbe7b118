import numpy as np

from marlp.rng import Stream, Xoshiro256StarStar, derive_seed, mix64


def test_mix64_reference_values():
    # frozen from the splitmix64 reference sequence for seed 0: the first
    # three outputs of state 0 advanced by the golden constant
    assert mix64(0) == 0xE220A8397B1DCDAF
    assert mix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4
    assert mix64(2 * 0x9E3779B97F4A7C15 % 2**64) == 0x06C45D188009454F


def test_streams_reproducible_and_distinct():
    a = Xoshiro256StarStar(derive_seed(7, Stream.AGENT, 0))
    b = Xoshiro256StarStar(derive_seed(7, Stream.AGENT, 0))
    c = Xoshiro256StarStar(derive_seed(7, Stream.AGENT, 1))
    seq_a = [a.next64() for _ in range(8)]
    seq_b = [b.next64() for _ in range(8)]
    seq_c = [c.next64() for _ in range(8)]
    assert seq_a == seq_b
    assert seq_a != seq_c


def test_uniform_range_and_determinism():
    rng = Xoshiro256StarStar(123)
    us = rng.uniforms(10_000)
    assert np.all(us >= 0.0) and np.all(us < 1.0)
    assert abs(us.mean() - 0.5) < 0.02
    rng2 = Xoshiro256StarStar(123)
    assert np.array_equal(us, rng2.uniforms(10_000))


def test_categorical_inverse_cdf():
    rng = Xoshiro256StarStar(5)
    cum = np.cumsum([0.0, 0.0, 1.0, 0.0])
    for _ in range(20):
        assert rng.categorical(cum) == 2

    # frequencies concentrate for a fair 4-way draw
    cum = np.cumsum([0.25, 0.25, 0.25, 0.25])
    counts = np.zeros(4)
    for _ in range(40_000):
        counts[rng.categorical(cum)] += 1
    assert np.abs(counts / 40_000 - 0.25).max() < 0.01


def test_derive_seed_order_sensitive():
    assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)
    assert derive_seed(1) != derive_seed(2)
