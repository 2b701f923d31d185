import numpy as np
import pytest
import torch

from motionchat.errors import DimMismatch
from motionchat.tokenizer import (Codebook, EmaVectorQuantizer, quantize,
                                  quantize_batch, rvq_quantize)


def brute_force_nn(feature, entries):
    best, best_d = 0, np.inf
    for i in range(entries.shape[0]):
        d = 0.0
        for a, b in zip(feature, entries[i]):
            d += (a - b) ** 2
        if d < best_d:
            best, best_d = i, d
    return best


def test_exact_entry():
    rng = np.random.default_rng(0)
    book = Codebook(entries=rng.standard_normal((8, 4)))
    idx, code = quantize(book.entries[3], book)
    assert idx == 3
    assert np.array_equal(code, book.entries[3])


def test_tie_breaks_to_lowest_index():
    entries = np.zeros((6, 2))
    entries[1] = [1.0, 0.0]
    entries[4] = [-1.0, 0.0]
    book = Codebook(entries=entries.copy())
    book.entries[0] = [5, 5]
    book.entries[2] = [5, -5]
    book.entries[3] = [-5, 5]
    book.entries[5] = [-5, -5]
    idx, code = quantize(np.array([0.0, 0.3]), book)
    assert idx == 1
    assert np.array_equal(code, book.entries[1])


def test_matches_brute_force_scan():
    rng = np.random.default_rng(42)
    book = Codebook(entries=rng.standard_normal((64, 8)))
    for _ in range(200):
        f = rng.standard_normal(8)
        idx, _ = quantize(f, book)
        assert idx == brute_force_nn(f, book.entries)


def test_dim_mismatch():
    book = Codebook(entries=np.zeros((4, 3)) + np.arange(4)[:, None])
    with pytest.raises(DimMismatch):
        quantize(np.zeros(5), book)


def test_batch_matches_single():
    rng = np.random.default_rng(1)
    book = Codebook(entries=rng.standard_normal((32, 6)))
    feats = rng.standard_normal((100, 6))
    idx, codes = quantize_batch(feats, book)
    for i in range(100):
        single_idx, single_code = quantize(feats[i], book)
        assert idx[i] == single_idx
        assert np.array_equal(codes[i], single_code)


def test_torch_quantizer_matches_numpy():
    rng = np.random.default_rng(2)
    entries = rng.standard_normal((32, 6))
    book = Codebook(entries=entries.copy())
    q = EmaVectorQuantizer(32, 6).double()
    with torch.no_grad():
        q.entries.copy_(torch.from_numpy(entries))
    feats = rng.standard_normal((200, 6))
    got = q.assign(torch.from_numpy(feats)).numpy()
    expected = quantize_batch(feats, book)[0]
    assert np.array_equal(got, expected)


def test_rvq_single_book_reduces_to_quantize():
    rng = np.random.default_rng(3)
    book = Codebook(entries=rng.standard_normal((16, 5)))
    f = rng.standard_normal(5)
    indices, residual = rvq_quantize(f, [book])
    idx, code = quantize(f, book)
    assert indices == [idx]
    assert np.allclose(residual, f - code)


def test_rvq_exact_two_layer_composition():
    rng = np.random.default_rng(4)
    b1 = Codebook(entries=10.0 * rng.standard_normal((8, 4)))
    b2 = Codebook(entries=0.01 * rng.standard_normal((12, 4)))
    f = b1.entries[2] + b2.entries[7]
    indices, residual = rvq_quantize(f, [b1, b2])
    assert indices == [2, 7]
    assert np.linalg.norm(residual) < 1e-10


def test_rvq_residual_monotone_with_zero_entry():
    # a zero code is always available, so the residual norm cannot grow
    rng = np.random.default_rng(5)
    books = []
    for k in range(4):
        e = rng.standard_normal((9, 6))
        e[0] = 0.0
        books.append(Codebook(entries=e))
    f = rng.standard_normal(6)
    residual = f.copy()
    norms = [np.linalg.norm(residual)]
    for k in range(1, 5):
        _, residual = rvq_quantize(f, books[:k])
        norms.append(np.linalg.norm(residual))
    assert all(norms[i + 1] <= norms[i] + 1e-12 for i in range(4))


def test_rvq_sum_reconstruction_exact():
    rng = np.random.default_rng(6)
    books = [Codebook(entries=rng.standard_normal((16, 4))) for _ in range(5)]
    f = rng.standard_normal(4)
    indices, residual = rvq_quantize(f, books)
    total = sum(b.entries[i] for b, i in zip(books, indices)) + residual
    assert np.allclose(total, f, atol=1e-12)


def test_ema_step_moves_entry_to_convex_combination():
    q = EmaVectorQuantizer(4, 3, decay=0.9).double()
    torch.manual_seed(0)
    with torch.no_grad():
        q.entries.copy_(torch.randn(4, 3, dtype=torch.float64))
    old = q.entries.clone()
    flat = torch.randn(10, 3, dtype=torch.float64)
    idx = torch.tensor([1, 1, 1, 2, 2, 2, 2, 1, 1, 2])
    q.ema_step(flat, idx)
    for code in (1, 2):
        mean = flat[idx == code].mean(0)
        expected = 0.9 * old[code] + 0.1 * mean
        assert torch.max(torch.abs(q.entries[code] - expected)) < 1e-10
    for untouched in (0, 3):
        assert torch.equal(q.entries[untouched], old[untouched])


def test_dead_code_reinit():
    q = EmaVectorQuantizer(4, 3, dead_code_steps=3)
    gen = torch.Generator().manual_seed(0)
    with torch.no_grad():
        q.entries.copy_(torch.randn(4, 3, generator=gen))
    stale_entry = q.entries[3].clone()
    flat = torch.randn(6, 3, generator=gen)
    idx = torch.tensor([0, 1, 2, 0, 1, 2])
    for _ in range(2):
        q.ema_step(flat, idx, generator=gen)
        assert q.stale_steps[3] > 0
    q.ema_step(flat, idx, generator=gen)  # third consecutive unused step
    assert q.stale_steps[3] == 0
    assert not torch.equal(q.entries[3], stale_entry)
    assert any(torch.equal(q.entries[3], flat[i]) for i in range(6))
