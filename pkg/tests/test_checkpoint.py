import struct

import numpy as np
import pytest

from trajgen.toydit.checkpoint import (
    CheckpointError,
    format_config,
    load_model,
    parse_config,
    read_checkpoint,
    write_checkpoint,
)
from trajgen.toydit.model import DitConfig, ToyDiT

CFG = DitConfig(width=8, blocks=1, heads=2, steps=10, frames=2, latent_size=4, cond="pose")


class TestFlatConfig:
    def test_parse(self):
        text = "# comment\n\nwidth = 32\n lr=0.01  # trailing\nname = a b\n"
        assert parse_config(text) == {"width": "32", "lr": "0.01", "name": "a b"}

    def test_round_trip(self):
        vals = {"b": 2, "a": "x", "c": 0.5}
        assert parse_config(format_config(vals)) == {k: str(v) for k, v in vals.items()}

    def test_errors(self):
        with pytest.raises(ValueError, match=":2: expected"):
            parse_config("a = 1\nnot a pair\n")
        with pytest.raises(ValueError, match="duplicate"):
            parse_config("a = 1\na = 2\n")


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        model = ToyDiT(CFG)
        p = tmp_path / "m.bin"
        write_checkpoint(p, CFG, model.state(), {"radius": 2.0})
        cfg, params, extra = read_checkpoint(p)
        assert cfg == CFG and extra == {"radius": "2.0"}
        for k, v in model.state().items():
            assert params[k].dtype == np.float32
            assert np.array_equal(params[k], v)
        loaded, _ = load_model(p)
        z = np.random.default_rng(0).standard_normal((1, 2, 4, 4, 3))
        pose = np.random.default_rng(1).random((1, 2, 4, 4, 3))
        assert np.array_equal(loaded.forward(z, 3, pose).data, model.forward(z, 3, pose).data)

    def test_layout(self, tmp_path):
        p = tmp_path / "m.bin"
        write_checkpoint(p, CFG, {"w": np.arange(6, dtype=np.float32).reshape(2, 3)})
        raw = p.read_bytes()
        assert raw[:4] == b"ITGN"
        version, n_text = struct.unpack_from("<II", raw, 4)
        assert version == 1
        text = raw[12:12 + n_text].decode()
        assert "model.width = 8" in text
        off = 12 + n_text
        (n_name,) = struct.unpack_from("<I", raw, off)
        assert raw[off + 4:off + 4 + n_name] == b"w"
        off += 4 + n_name
        rank, d0, d1 = struct.unpack_from("<III", raw, off)
        (nbytes,) = struct.unpack_from("<Q", raw, off + 12)
        assert (rank, d0, d1, nbytes) == (2, 2, 3, 24)
        vals = np.frombuffer(raw[off + 20:], dtype="<f4")
        assert vals.tolist() == [0, 1, 2, 3, 4, 5]

    def test_bad_magic_and_truncation(self, tmp_path):
        p = tmp_path / "m.bin"
        p.write_bytes(b"NOPE" + bytes(8))
        with pytest.raises(CheckpointError, match="magic"):
            read_checkpoint(p)
        write_checkpoint(p, CFG, ToyDiT(CFG).state())
        p.write_bytes(p.read_bytes()[:-3])
        with pytest.raises(CheckpointError, match="truncated"):
            read_checkpoint(p)

    def test_missing_tensor(self, tmp_path):
        p = tmp_path / "m.bin"
        state = ToyDiT(CFG).state()
        state.pop("final.b")
        write_checkpoint(p, CFG, state)
        with pytest.raises(ValueError, match="final.b"):
            load_model(p)
