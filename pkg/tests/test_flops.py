import pytest
import yaml

from shuttlepipe.flops import (
    ArchError,
    ArchSpec,
    Block,
    LayerSpec,
    arch_compare,
    arch_flops,
    arch_from_dict,
    layer_flops,
    load_arch,
    reference_arch,
    scale_channels,
    with_input,
)


def conv(out, k=3, stride=1, **kw):
    return LayerSpec("conv2d", (k, k), out_channels=out, stride=stride, **kw)


class TestLayerFlops:
    def test_conv3x3_hand_count(self):
        flops, shape = layer_flops(conv(1), 4, 4, 1)
        assert flops == 2 * 9 * 16 == 288
        assert shape == (4, 4, 1)

    def test_conv1x1_single_mac(self):
        assert layer_flops(conv(1, k=1), 1, 1, 1) == (2, (1, 1, 1))

    def test_activation(self):
        assert layer_flops(LayerSpec("activation"), 1, 10, 1) == (10, (1, 10, 1))

    def test_batchnorm(self):
        assert layer_flops(LayerSpec("batchnorm"), 2, 5, 3)[0] == 60

    def test_mac_convention(self):
        assert layer_flops(conv(1), 4, 4, 1, flops_per_mac=1)[0] == 144

    def test_free_layers(self):
        assert layer_flops(LayerSpec("pool", stride=2), 8, 6, 4) == (0, (4, 3, 4))
        assert layer_flops(LayerSpec("upsample", scale=2), 4, 3, 4) == (0, (8, 6, 4))
        assert layer_flops(LayerSpec("concat", source="x"), 4, 3, 4, skip_ch=5) == (0, (4, 3, 9))

    def test_strided_conv_same_padding(self):
        flops, shape = layer_flops(conv(8, stride=2), 7, 7, 3)
        assert shape == (4, 4, 8)
        assert flops == 2 * 9 * 3 * 8 * 16

    def test_channel_mismatch(self):
        with pytest.raises(ArchError):
            layer_flops(conv(4, in_channels=3), 8, 8, 5)

    def test_bad_layers(self):
        with pytest.raises(ArchError):
            LayerSpec("dense")
        with pytest.raises(ArchError):
            LayerSpec("conv2d")
        with pytest.raises(ArchError):
            layer_flops(LayerSpec("pool", stride=4), 2, 2, 1)


def tiny_unet(h=32, w=32):
    return ArchSpec(
        "tiny",
        (h, w, 3),
        (
            Block("enc1", "encoder", (conv(8), LayerSpec("activation"))),
            Block("enc2", "encoder", (LayerSpec("pool", stride=2), LayerSpec("pool", stride=2), conv(16))),
            Block("dec1", "decoder", (LayerSpec("upsample", scale=4), LayerSpec("concat", source="enc1"), conv(8))),
            Block("head", "head", (conv(1, k=1),)),
        ),
    )


class TestArchFlops:
    def test_empty(self):
        assert arch_flops(ArchSpec("empty", (16, 16, 3))).total == 0

    def test_additive(self):
        report = arch_flops(tiny_unet())
        total = 0
        for layer, (h, w, c) in [
            (conv(8), (32, 32, 3)),
            (LayerSpec("activation"), (32, 32, 8)),
            (conv(16), (8, 8, 8)),
            (conv(8), (32, 32, 24)),
            (conv(1, k=1), (32, 32, 8)),
        ]:
            total += layer_flops(layer, h, w, c)[0]
        assert report.total == total
        assert report.output == (32, 32, 1)

    def test_shape_mismatch_names_layer(self):
        arch = ArchSpec(
            "bad",
            (32, 32, 3),
            (
                Block("enc1", "encoder", (conv(8),)),
                Block("dec1", "decoder", (LayerSpec("pool", stride=2), LayerSpec("concat", source="enc1"))),
            ),
        )
        with pytest.raises(ArchError, match="dec1.1.concat"):
            arch_flops(arch)

    def test_concat_before_source(self):
        arch = ArchSpec("bad", (8, 8, 3), (Block("dec", "decoder", (LayerSpec("concat", source="enc"),)),))
        with pytest.raises(ArchError):
            arch_flops(arch)

    def test_tap_must_be_decoder(self):
        from shuttlepipe.flops import Tap

        with pytest.raises(ArchError):
            ArchSpec("t", (8, 8, 3), (Block("enc", "encoder", (conv(4),)),), (Tap("enc"),))

    def test_channel_doubling_quadruples_convs(self):
        base = arch_flops(tiny_unet())
        doubled = arch_flops(scale_channels(tiny_unet(), 2))
        for a, b in zip(base.rows, doubled.rows):
            if a.kind == "conv2d":
                assert b.flops == 4 * a.flops

    def test_resolution_doubling(self):
        arch = reference_arch("unet")
        small = arch_flops(with_input(arch, 320, 320))
        big = arch_flops(arch)
        layers = [l for b in arch.blocks for l in b.layers]
        assert len(layers) == len([r for r in small.rows if r.kind != "tap"])
        for a, b in zip(small.rows, big.rows):
            if a.kind in ("conv2d", "tap"):
                assert b.flops == 4 * a.flops

    @pytest.mark.parametrize("name", ["unet", "asym_unet"])
    def test_reference_shape_round_trip(self, name):
        arch = reference_arch(name)
        report = arch_flops(arch)
        assert report.output[:2] == arch.input[:2]

    def test_monotone_in_resolution_and_kernel(self):
        prev = 0
        for side in (16, 32, 48, 64):
            cur = arch_flops(tiny_unet(side, side)).total
            assert cur > prev
            prev = cur
        assert layer_flops(conv(4, k=5), 8, 8, 2)[0] > layer_flops(conv(4, k=3), 8, 8, 2)[0]

    def test_table(self):
        text = arch_flops(tiny_unet()).table()
        assert text.startswith("# tiny")
        assert "total" in text.splitlines()[-1]


class TestReferences:
    def test_unet_total(self):
        assert arch_flops(reference_arch("unet")).gflops == pytest.approx(255.8, rel=0.02)

    def test_asym_total(self):
        assert arch_flops(reference_arch("asym_unet")).gflops == pytest.approx(188.26, rel=0.02)

    def test_ratio(self):
        ratio, delta = arch_compare(reference_arch("unet"), reference_arch("asym_unet"))
        assert abs(ratio - 0.736) <= 0.015
        assert delta < 0

    def test_self_compare(self):
        arch = reference_arch("unet")
        assert arch_compare(arch, arch) == (1.0, 0.0)

    def test_asym_decoder_is_lighter(self):
        def decoder_cost(name):
            arch = reference_arch(name)
            dec = {b.name for b in arch.blocks if b.role == "decoder"}
            return sum(r.flops for r in arch_flops(arch).rows if r.name.split(".")[0] in dec)

        assert decoder_cost("asym_unet") < decoder_cost("unet")

    def test_resolution_mismatch(self):
        arch = reference_arch("unet")
        with pytest.raises(ArchError):
            arch_compare(arch, with_input(arch, 320, 320))

    def test_unknown_reference(self):
        with pytest.raises(ArchError):
            reference_arch("resnet")


class TestFileFormat:
    def test_round_trip(self, tmp_path):
        data = {
            "name": "small",
            "input": [16, 16, 3],
            "blocks": [
                {"name": "enc", "role": "encoder", "layers": [{"kind": "conv2d", "kernel": 3, "out": 4}]},
                {
                    "name": "dec",
                    "role": "decoder",
                    "layers": [{"kind": "concat", "from": "enc"}, {"kind": "conv2d", "kernel": [1, 3], "out": 2}],
                },
            ],
            "taps": ["dec"],
        }
        path = tmp_path / "small.yaml"
        path.write_text(yaml.safe_dump(data))
        arch = load_arch(path)
        assert arch.blocks[1].layers[1].kernel == (1, 3)
        report = arch_flops(arch)
        expected = 2 * 9 * 3 * 4 * 256 + 2 * 3 * 8 * 2 * 256 + 2 * 2 * 1 * 256
        assert report.total == expected

    @pytest.mark.parametrize(
        "data",
        [
            [],
            {"name": "x"},
            {"name": "x", "input": [16, 16]},
            {"name": "x", "input": [16, 16, 3], "blocks": [{"name": "b", "layers": [{"out": 3}]}]},
            {"name": "x", "input": [16, 16, 3], "blocks": [{"name": "b", "layers": [{"kind": "conv2d", "out": 3, "pad": 1}]}]},
            {"name": "x", "input": [16, 16, 3], "blocks": [{"name": "b", "role": "middle", "layers": []}]},
        ],
    )
    def test_malformed(self, data):
        with pytest.raises(ArchError):
            arch_from_dict(data)

    def test_bad_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("name: [unclosed\n")
        with pytest.raises(ArchError):
            load_arch(path)
