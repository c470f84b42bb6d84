"""Virtual neck: cross-sections, relation rules, noise, guidance, model files."""

import math
from dataclasses import replace

import numpy as np
import pytest

import oracles
from sonograph.core import (
    EntityClass,
    LateralSide,
    PredicateClass,
    flip_horizontal,
    validate,
)
from sonograph.errors import SonographError
from sonograph.sim import (
    Ellipse,
    EllipseTrack,
    GuideDirection,
    NeckModel,
    NoiseConfig,
    ProbePose,
    SimulatorPredictor,
    cross_section,
    default_model,
    derive_relations,
    oracle_guidance,
    parse_model,
    pose_image_id,
    quantize,
    write_model,
)

CW = PredicateClass.CONTIGUOUS_WITH
PE = PredicateClass.PARTIALLY_ENCASES
SUP = PredicateClass.SUPERIOR_TO

MODEL = default_model()


def grid_poses(side, z_step=2, u_step=4):
    return [
        ProbePose(zi / 20, ui / 20, side)
        for zi in range(0, 21, z_step)
        for ui in range(-20, 21, u_step)
    ]


class TestPose:
    def test_quantize_snaps_to_twentieths(self):
        assert quantize(0.49) == 0.5
        assert quantize(0.466) == 0.45
        assert quantize(-0.021) == -0.0

    def test_negative_zero_is_normalized(self):
        p = ProbePose(0.5, -0.0, LateralSide.LEFT)
        assert math.copysign(1.0, p.u) == 1.0
        assert pose_image_id(p) == pose_image_id(ProbePose(0.5, 0.0, LateralSide.LEFT))

    def test_out_of_range_rejected(self):
        with pytest.raises(SonographError) as exc:
            ProbePose(1.2, 0.0, LateralSide.LEFT)
        assert exc.value.code == "BAD_CONFIG"
        with pytest.raises(SonographError):
            ProbePose(0.5, -1.3, LateralSide.LEFT)
        with pytest.raises(SonographError):
            ProbePose(0.5, 0.0, "sideways")

    def test_image_ids_distinguish_all_pose_fields(self):
        ids = {pose_image_id(p) for p in grid_poses(LateralSide.LEFT)}
        ids |= {pose_image_id(p) for p in grid_poses(LateralSide.RIGHT)}
        assert len(ids) == 2 * 11 * 11


class TestModelValidation:
    def test_default_model_is_valid(self):
        default_model().validate()

    def test_vessels_must_span_the_full_z_range(self):
        tracks = list(MODEL.tracks)
        tracks[0] = replace(tracks[0], z_lo=0.2)
        with pytest.raises(SonographError) as exc:
            NeckModel(tracks=tuple(tracks)).validate()
        assert exc.value.code == "BAD_CONFIG"

    def test_track_order_and_completeness_enforced(self):
        with pytest.raises(SonographError):
            NeckModel(tracks=MODEL.tracks[:4]).validate()
        with pytest.raises(SonographError):
            NeckModel(tracks=MODEL.tracks[::-1]).validate()

    def test_bad_radius_and_interval(self):
        tracks = list(MODEL.tracks)
        tracks[2] = replace(tracks[2], rx=0.0)
        with pytest.raises(SonographError):
            NeckModel(tracks=tuple(tracks)).validate()
        tracks = list(MODEL.tracks)
        tracks[2] = replace(tracks[2], z_lo=0.9, z_hi=0.4)
        with pytest.raises(SonographError):
            NeckModel(tracks=tuple(tracks)).validate()

    def test_bad_thresholds(self):
        with pytest.raises(SonographError):
            replace(MODEL, encasement_min_deg=0.0).validate()
        with pytest.raises(SonographError):
            replace(MODEL, contiguity_gap_px=-1.0).validate()


class TestCrossSection:
    def test_full_visibility_scene(self):
        sg = cross_section(MODEL, ProbePose(0.5, 0.0, LateralSide.LEFT))
        assert [d.cls for d in sg.detections] == list(EntityClass)
        assert all(d.score == 1.0 for d in sg.detections)
        named = {
            (sg.detections[t.sub].cls, t.pred, sg.detections[t.obj].cls)
            for t in sg.triplets
        }
        assert named == {
            (EntityClass.CCA, CW, EntityClass.TH),
            (EntityClass.IJV, SUP, EntityClass.CCA),
            (EntityClass.IJV, SUP, EntityClass.TH),
            (EntityClass.CR, SUP, EntityClass.TH),
            (EntityClass.CR, SUP, EntityClass.VB),
            (EntityClass.TH, PE, EntityClass.CR),
            (EntityClass.TH, SUP, EntityClass.VB),
        }
        assert validate(sg) == []

    def test_caudal_sections_lose_cartilage_and_thyroid(self):
        sg = cross_section(MODEL, ProbePose(0.1, 0.0, LateralSide.LEFT))
        present = {d.cls for d in sg.detections}
        assert EntityClass.CR not in present
        assert EntityClass.TH not in present
        assert {EntityClass.CCA, EntityClass.IJV, EntityClass.VB} <= present

    def test_lateral_shift_pushes_midline_structures_off_image(self):
        sg = cross_section(MODEL, ProbePose(0.5, -1.0, LateralSide.LEFT))
        assert EntityClass.CR not in {d.cls for d in sg.detections}

    def test_every_grid_pose_yields_a_valid_graph(self):
        for pose in grid_poses(LateralSide.LEFT, 4, 8):
            sg = cross_section(MODEL, pose)
            assert validate(sg) == []
            assert sg.image_id == pose_image_id(pose)

    def test_triplet_per_ordered_pair_is_unique(self):
        for pose in grid_poses(LateralSide.LEFT, 4, 8):
            sg = cross_section(MODEL, pose)
            pairs = [(t.sub, t.obj) for t in sg.triplets]
            assert len(pairs) == len(set(pairs))

    def test_relations_match_dense_sampling_oracle(self):
        from sonograph.sim import _visible_items

        for z in (0.0, 0.1, 0.3, 0.5, 0.75, 1.0):
            for u in (-0.85, -0.5, 0.0, 0.6):
                items = [(cls, e) for cls, e, _ in _visible_items(MODEL, z, u)]
                sg = cross_section(MODEL, ProbePose(z, u, LateralSide.LEFT))
                impl = {(t.sub, t.pred, t.obj) for t in sg.triplets}
                assert impl == oracles.relations_dense(MODEL, items), (z, u)


class TestMirror:
    def test_right_frame_boxes_are_mirrored_left_geometry(self):
        # oracle route: clip each ellipse at (z, -u) ourselves, then mirror x
        for pose in grid_poses(LateralSide.RIGHT, 2, 4):
            sg = cross_section(MODEL, pose)
            expected = []
            for t in MODEL.tracks:
                if not t.present_at(pose.z):
                    continue
                e = t.ellipse_at(pose.z, -pose.u, MODEL.lateral_shift_px)
                x0 = max(0, math.floor(e.cx - e.rx))
                x1 = min(MODEL.width, math.ceil(e.cx + e.rx))
                y0 = max(0, math.floor(e.cy - e.ry))
                y1 = min(MODEL.height, math.ceil(e.cy + e.ry))
                if x1 <= x0 or y1 <= y0:
                    continue
                expected.append(
                    (t.entity, MODEL.width - x1, y0, x1 - x0, y1 - y0))
            got = [
                (d.cls, d.box.x, d.box.y, d.box.w, d.box.h) for d in sg.detections
            ]
            assert got == expected, pose

    def test_mirror_pairs_share_triplets_and_sizes(self):
        for pose in grid_poses(LateralSide.LEFT, 2, 4):
            left = cross_section(MODEL, pose)
            right = cross_section(
                MODEL, ProbePose(pose.z, -pose.u, LateralSide.RIGHT))
            assert left.triplets == right.triplets
            assert [d.cls for d in left.detections] == [d.cls for d in right.detections]
            mirrored = flip_horizontal(right)
            assert [d.box for d in mirrored.detections] == [d.box for d in left.detections]


class TestRelationRules:
    def test_partial_encasement_fires_within_the_band(self):
        big = Ellipse(0.0, 0.0, 100.0, 100.0)
        small = Ellipse(110.0, 0.0, 30.0, 30.0)
        # viewing a radius-100 disc from 110 px subtends 2*asin(100/110) ~ 131 deg
        expected_deg = 2 * math.degrees(math.asin(100.0 / 110.0))
        assert 120.0 < expected_deg < 360.0
        trips = derive_relations(MODEL, [(EntityClass.TH, big), (EntityClass.CR, small)])
        # encasement takes priority over the contiguity these two also satisfy
        assert [(t.sub, t.pred, t.obj) for t in trips] == [(0, PE, 1)]

    def test_containment_is_not_partial_encasement(self):
        big = Ellipse(0.0, 0.0, 100.0, 100.0)
        inside = Ellipse(20.0, 0.0, 10.0, 10.0)
        trips = derive_relations(MODEL, [(EntityClass.TH, big), (EntityClass.CR, inside)])
        # full 360-degree coverage falls through to contiguity
        assert [(t.sub, t.pred, t.obj) for t in trips] == [(0, CW, 1)]

    def test_narrow_view_is_not_partial_encasement(self):
        big = Ellipse(0.0, 0.0, 100.0, 100.0)
        far = Ellipse(260.0, 0.0, 30.0, 30.0)  # gap 130 > contiguity threshold
        trips = derive_relations(MODEL, [(EntityClass.TH, big), (EntityClass.CR, far)])
        assert trips == ()

    def test_superiority_needs_margin_and_horizontal_overlap(self):
        a = Ellipse(0.0, 0.0, 30.0, 30.0)
        below = Ellipse(10.0, 100.0, 30.0, 30.0)
        trips = derive_relations(MODEL, [(EntityClass.CR, a), (EntityClass.VB, below)])
        assert [(t.sub, t.pred, t.obj) for t in trips] == [(0, SUP, 1)]
        # 40 px is not strictly more than the margin
        at_margin = Ellipse(10.0, 40.0, 30.0, 30.0)
        trips = derive_relations(MODEL, [(EntityClass.CR, a), (EntityClass.VB, at_margin)])
        assert all(t.pred is not SUP for t in trips)
        # no horizontal overlap: centers 70 px apart vs rx sum 60
        offset = Ellipse(70.0, 100.0, 30.0, 30.0)
        trips = derive_relations(MODEL, [(EntityClass.CR, a), (EntityClass.VB, offset)])
        assert all(t.pred is not SUP for t in trips)

    def test_contiguity_gap_threshold(self):
        a = Ellipse(0.0, 0.0, 30.0, 30.0)
        near = Ellipse(65.0, 0.0, 30.0, 30.0)  # boundary gap 5
        trips = derive_relations(MODEL, [(EntityClass.CCA, a), (EntityClass.IJV, near)])
        assert [(t.sub, t.pred, t.obj) for t in trips] == [(0, CW, 1)]
        far = Ellipse(85.0, 0.0, 30.0, 30.0)  # boundary gap 25
        trips = derive_relations(MODEL, [(EntityClass.CCA, a), (EntityClass.IJV, far)])
        assert trips == ()

    def test_contiguity_uses_lower_index_as_subject_once(self):
        a = Ellipse(0.0, 0.0, 30.0, 30.0)
        near = Ellipse(65.0, 0.0, 30.0, 30.0)
        trips = derive_relations(MODEL, [(EntityClass.IJV, near), (EntityClass.CCA, a)])
        assert [(t.sub, t.pred, t.obj) for t in trips] == [(0, CW, 1)]

    def test_empty_scene(self):
        assert derive_relations(MODEL, []) == ()


class TestNoise:
    def test_zero_noise_returns_ground_truth(self):
        p = SimulatorPredictor(MODEL)
        pose = ProbePose(0.5, 0.0, LateralSide.LEFT)
        assert p.predict(pose) == cross_section(MODEL, pose)

    def test_drop_probability_one_empties_the_scene(self):
        p = SimulatorPredictor(MODEL, NoiseConfig(seed=1, drop_prob=1.0))
        sg = p.predict(ProbePose(0.5, 0.0, LateralSide.LEFT))
        assert sg.detections == () and sg.triplets == ()

    def test_same_seed_same_output(self):
        cfg = NoiseConfig(seed=9, box_jitter_px=4.0, drop_prob=0.2, score_noise=0.1)
        pose = ProbePose(0.5, 0.0, LateralSide.LEFT)
        assert SimulatorPredictor(MODEL, cfg).predict(pose) == \
            SimulatorPredictor(MODEL, cfg).predict(pose)

    def test_different_seed_differs_somewhere(self):
        poses = grid_poses(LateralSide.LEFT, 4, 8)
        a = SimulatorPredictor(MODEL, NoiseConfig(seed=1, box_jitter_px=4.0))
        b = SimulatorPredictor(MODEL, NoiseConfig(seed=2, box_jitter_px=4.0))
        assert any(a.predict(p) != b.predict(p) for p in poses)

    def test_noisy_output_is_structurally_valid(self):
        cfg = NoiseConfig(seed=3, box_jitter_px=15.0, drop_prob=0.3,
                          score_noise=0.4, spurious_prob=0.2)
        p = SimulatorPredictor(MODEL, cfg)
        for pose in grid_poses(LateralSide.LEFT, 4, 8):
            assert validate(p.predict(pose)) == []

    def test_spurious_relations_respect_the_pair_constraint(self):
        cfg = NoiseConfig(seed=4, spurious_prob=1.0)
        sg = SimulatorPredictor(MODEL, cfg).predict(ProbePose(0.5, 0.0, LateralSide.LEFT))
        pairs = [(t.sub, t.obj) for t in sg.triplets]
        assert len(pairs) == len(set(pairs))
        n = len(sg.detections)
        assert len(pairs) == n * (n - 1)  # every ordered pair is now related

    def test_bad_noise_config_rejected(self):
        with pytest.raises(SonographError):
            NoiseConfig(drop_prob=1.5).validate()
        with pytest.raises(SonographError):
            NoiseConfig(box_jitter_px=-1.0).validate()


class TestGuidance:
    def test_already_visible(self):
        adv = oracle_guidance(MODEL, ProbePose(0.5, 0.0, LateralSide.LEFT), EntityClass.CR)
        assert adv.visible and adv.direction is None and adv.steps == 0

    def test_cranial_move_to_reach_cartilage(self):
        adv = oracle_guidance(MODEL, ProbePose(0.1, 0.0, LateralSide.LEFT), EntityClass.CR)
        assert (adv.visible, adv.direction, adv.steps) == (False, GuideDirection.CRANIAL, 5)

    def test_caudal_move_when_target_band_is_below(self):
        adv = oracle_guidance(MODEL, ProbePose(1.0, 0.0, LateralSide.LEFT), EntityClass.TH)
        assert (adv.visible, adv.direction, adv.steps) == (False, GuideDirection.CAUDAL, 6)

    def test_medial_move_left_side(self):
        adv = oracle_guidance(MODEL, ProbePose(0.5, -1.0, LateralSide.LEFT), EntityClass.CR)
        assert (adv.visible, adv.direction, adv.steps) == (False, GuideDirection.MEDIAL, 3)

    def test_medial_move_mirrors_on_the_right(self):
        adv = oracle_guidance(MODEL, ProbePose(0.5, 1.0, LateralSide.RIGHT), EntityClass.CR)
        assert (adv.visible, adv.direction, adv.steps) == (False, GuideDirection.MEDIAL, 3)

    def test_combined_move_returns_the_z_leg_first(self):
        adv = oracle_guidance(MODEL, ProbePose(0.1, -1.0, LateralSide.LEFT), EntityClass.CR)
        assert (adv.visible, adv.direction, adv.steps) == (False, GuideDirection.CRANIAL, 5)

    def test_narrower_presence_band_changes_the_step_count(self):
        tracks = list(MODEL.tracks)
        tracks[2] = replace(tracks[2], z_lo=0.3, z_hi=0.7)
        model = NeckModel(tracks=tuple(tracks))
        adv = oracle_guidance(model, ProbePose(0.1, 0.0, LateralSide.LEFT), EntityClass.CR)
        assert (adv.direction, adv.steps) == (GuideDirection.CRANIAL, 4)

    def test_unreachable_target(self):
        tracks = list(MODEL.tracks)
        tracks[2] = replace(tracks[2], x=5000.0)
        model = NeckModel(tracks=tuple(tracks))
        with pytest.raises(SonographError) as exc:
            oracle_guidance(model, ProbePose(0.5, 0.0, LateralSide.LEFT), EntityClass.CR)
        assert exc.value.code == "UNREACHABLE"

    def test_advice_matches_search_oracle_on_the_grid(self):
        for side in (LateralSide.LEFT, LateralSide.RIGHT):
            for target in (EntityClass.CR, EntityClass.TH):
                visible = oracles.visible_grid_poses(
                    MODEL, side, target, cross_section,
                    lambda z, u, s=side: ProbePose(z, u, s))
                for pose in grid_poses(side, 4, 5):
                    adv = oracle_guidance(MODEL, pose, target)
                    got = (adv.visible,
                           adv.direction.value if adv.direction else None,
                           adv.steps)
                    assert got == oracles.advice_oracle(pose, visible), (side, target, pose)

    def test_following_advice_reaches_the_target_in_minimal_steps(self):
        rng = np.random.default_rng(48)
        for side in (LateralSide.LEFT, LateralSide.RIGHT):
            target = EntityClass.CR
            visible = oracles.visible_grid_poses(
                MODEL, side, target, cross_section,
                lambda z, u, s=side: ProbePose(z, u, s))
            for _ in range(20):
                pose = ProbePose(
                    int(rng.integers(0, 21)) / 20,
                    int(rng.integers(-20, 21)) / 20, side)
                if (pose.z, pose.u) in set(visible):
                    continue
                budget = oracles.min_total_steps(pose, visible)
                walked = 0
                for _ in range(10):  # a leg per iteration; two axes suffice
                    adv = oracle_guidance(MODEL, pose, target)
                    if adv.visible:
                        break
                    dz = du = 0.0
                    if adv.direction is GuideDirection.CRANIAL:
                        dz = adv.steps * 0.05
                    elif adv.direction is GuideDirection.CAUDAL:
                        dz = -adv.steps * 0.05
                    else:
                        medial = adv.direction is GuideDirection.MEDIAL
                        positive = medial if side is LateralSide.LEFT else not medial
                        du = adv.steps * 0.05 * (1 if positive else -1)
                    pose = ProbePose(quantize(pose.z + dz), quantize(pose.u + du), side)
                    walked += adv.steps
                assert oracle_guidance(MODEL, pose, target).visible
                assert walked == budget, (side, pose, walked, budget)


class TestModelFiles:
    def test_round_trip(self):
        text = write_model(MODEL)
        assert parse_model(text) == MODEL
        assert write_model(parse_model(text)) == text

    def test_syntax_error(self):
        with pytest.raises(SonographError) as exc:
            parse_model("{nope")
        assert exc.value.code == "SYNTAX"

    def test_schema_errors(self):
        import json

        doc = json.loads(write_model(MODEL))
        doc["version"] = 2
        with pytest.raises(SonographError) as exc:
            parse_model(json.dumps(doc))
        assert exc.value.code == "SCHEMA"

        doc = json.loads(write_model(MODEL))
        doc["unexpected"] = 1
        with pytest.raises(SonographError) as exc:
            parse_model(json.dumps(doc))
        assert exc.value.code == "SCHEMA"

        doc = json.loads(write_model(MODEL))
        del doc["entities"]["CCA"]
        with pytest.raises(SonographError) as exc:
            parse_model(json.dumps(doc))
        assert exc.value.code == "SCHEMA"

        doc = json.loads(write_model(MODEL))
        doc["entities"]["CCA"]["z"] = [0.0, 0.5, 1.0]
        with pytest.raises(SonographError) as exc:
            parse_model(json.dumps(doc))
        assert exc.value.code == "SCHEMA"

    def test_vocab_error(self):
        import json

        doc = json.loads(write_model(MODEL))
        doc["entities"]["AORTA"] = doc["entities"]["CCA"]
        with pytest.raises(SonographError) as exc:
            parse_model(json.dumps(doc))
        assert exc.value.code == "VOCAB"

    def test_invariants_rechecked_on_parse(self):
        import json

        doc = json.loads(write_model(MODEL))
        doc["entities"]["CR"]["rx"] = -5
        with pytest.raises(SonographError) as exc:
            parse_model(json.dumps(doc))
        assert exc.value.code == "BAD_CONFIG"
