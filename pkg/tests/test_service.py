"""Experiment lifecycle, sessions, tagging, uploads, and analysis views."""

from datetime import timedelta

import pytest

from emomap.errors import (
    BadCredentials,
    CenterAmbiguous,
    ExperimentFinished,
    ExperimentNotActive,
    ImageTooLarge,
    InvalidSchedule,
    MissingLocation,
    ModeImmutable,
    NoPictures,
    ParticipantNotAssigned,
    TokenExpired,
    UndecodableImage,
    UnknownParticipant,
    UnknownPicture,
    UnknownTagMap,
    WrongMode,
)
from emomap.model import ExperimentState, GeoPoint, Mode, OrderingPolicy
from emomap.service import Platform
from emomap.store import FileStore
from emomap.wheel import Placement, classify

from conftest import jpeg_bytes, png_bytes, sequential_ids
from helpers import BASE_TIME

START = BASE_TIME - timedelta(hours=1)
FINISH = BASE_TIME + timedelta(days=7)


def make_curated(platform, pictures=3, ordering=OrderingPolicy.FIXED, activate=True):
    exp = platform.create_experiment(
        mode=Mode.CURATED, start_time=START, finish_time=FINISH, ordering=ordering
    )
    for _ in range(pictures):
        platform.add_curated_picture(exp.id, jpeg_bytes(color=(_ * 40 % 255, 10, 10)), uploaded_by="res")
    if activate:
        platform.activate_experiment(exp.id)
    return platform.get_experiment(exp.id)


def make_field(platform, activate=True):
    exp = platform.create_experiment(mode=Mode.FIELD, start_time=START, finish_time=FINISH)
    if activate:
        platform.activate_experiment(exp.id)
    return exp


def join(platform, exp, name="Anna"):
    participant = platform.create_participant(name)
    invitation = platform.mint_invitation(exp.id, participant.id)
    return participant, invitation


# -- experiment lifecycle -------------------------------------------------------


def test_create_experiment_draft(platform):
    exp = platform.create_experiment(mode=Mode.CURATED, start_time=START, finish_time=FINISH)
    assert exp.state is ExperimentState.DRAFT
    assert exp.mode is Mode.CURATED
    assert exp.id


def test_create_rejects_bad_schedule(platform):
    with pytest.raises(InvalidSchedule):
        platform.create_experiment(mode=Mode.CURATED, start_time=FINISH, finish_time=START)
    with pytest.raises(InvalidSchedule):
        platform.create_experiment(mode=Mode.CURATED, start_time=START, finish_time=START)


def test_create_rejects_unknown_tag_map(platform):
    with pytest.raises(UnknownTagMap):
        platform.create_experiment(
            mode=Mode.CURATED, start_time=START, finish_time=FINISH, tag_map_id="nope"
        )


def test_mode_is_immutable(platform):
    exp = make_field(platform, activate=False)
    with pytest.raises(ModeImmutable):
        platform.update_experiment(exp.id, {"mode": Mode.CURATED})
    assert platform.get_experiment(exp.id).mode is Mode.FIELD


def test_update_during_active_and_not_after_finish(platform):
    exp = make_curated(platform)
    anna = platform.create_participant("Anna")
    updated = platform.update_experiment(exp.id, {"participant_ids": {anna.id}})
    assert anna.id in updated.participant_ids

    platform.finish_experiment(exp.id)
    with pytest.raises(ExperimentFinished):
        platform.update_experiment(exp.id, {"locale_default": "pl"})


def test_state_transitions_monotone(platform):
    exp = platform.create_experiment(mode=Mode.FIELD, start_time=START, finish_time=FINISH)
    with pytest.raises(ExperimentNotActive):
        platform.finish_experiment(exp.id)  # DRAFT cannot skip to FINISHED
    platform.activate_experiment(exp.id)
    platform.activate_experiment(exp.id)  # idempotent
    platform.finish_experiment(exp.id)
    platform.finish_experiment(exp.id)  # idempotent
    with pytest.raises(ExperimentFinished):
        platform.activate_experiment(exp.id)


def test_curated_activation_needs_pictures(platform):
    exp = platform.create_experiment(mode=Mode.CURATED, start_time=START, finish_time=FINISH)
    with pytest.raises(NoPictures):
        platform.activate_experiment(exp.id)


# -- ordering ----------------------------------------------------------------------


def test_fixed_order_as_configured(platform):
    exp = make_curated(platform, pictures=3)
    assert platform.picture_order(exp, "anyone") == exp.picture_ids


def test_random_order_deterministic_per_participant(platform):
    exp = make_curated(platform, pictures=6, ordering=OrderingPolicy.RANDOM_PER_PARTICIPANT)
    a = platform.picture_order(exp, "pa")
    b = platform.picture_order(exp, "pb")
    assert platform.picture_order(exp, "pa") == a
    assert sorted(a) == sorted(exp.picture_ids)
    assert a != b or len(set(map(tuple, (a, b)))) == 1  # almost surely different


def test_picture_order_wrong_mode(platform):
    exp = make_field(platform)
    with pytest.raises(WrongMode):
        platform.picture_order(exp, "p")


# -- sessions ------------------------------------------------------------------------


def test_token_login_opens_session(platform):
    exp = make_curated(platform)
    _, invitation = join(platform, exp)
    assert len(invitation.token) >= 22
    assert invitation.url_payload == f"http://emomap.test/join/{invitation.token}"
    session = platform.open_session_with_token(invitation.token)
    assert session.cursor == 0
    assert session.experiment_id == exp.id


def test_unknown_token_rejected(platform):
    with pytest.raises(BadCredentials):
        platform.open_session_with_token("nope")


def test_expired_invitation(platform, clock):
    exp = make_curated(platform)
    participant = platform.create_participant("Anna")
    invitation = platform.mint_invitation(
        exp.id, participant.id, expires_at=BASE_TIME + timedelta(hours=1)
    )
    clock.advance(hours=2)
    with pytest.raises(TokenExpired):
        platform.open_session_with_token(invitation.token)


def test_login_after_finish_time(platform, clock):
    exp = make_curated(platform)
    _, invitation = join(platform, exp)
    clock.advance(days=8)
    with pytest.raises(ExperimentNotActive):
        platform.open_session_with_token(invitation.token)


def test_login_before_activation(platform):
    exp = make_curated(platform, activate=False)
    _, invitation = join(platform, exp)
    with pytest.raises(ExperimentNotActive):
        platform.open_session_with_token(invitation.token)


def test_credential_login(platform):
    exp = make_curated(platform)
    participant = platform.create_participant("Jan", username="jan", password="szczotka")
    platform.add_participant_to_experiment(exp.id, participant.id)
    session = platform.open_session_with_credentials(exp.id, "jan", "szczotka")
    assert session.participant_id == participant.id
    with pytest.raises(BadCredentials):
        platform.open_session_with_credentials(exp.id, "jan", "wrong")
    with pytest.raises(BadCredentials):
        platform.open_session_with_credentials(exp.id, "ghost", "x")


def test_unassigned_participant_cannot_join(platform):
    exp = make_curated(platform)
    participant = platform.create_participant("Eve", username="eve", password="pw")
    with pytest.raises(ParticipantNotAssigned):
        platform.open_session_with_credentials(exp.id, "eve", "pw")


def test_one_session_at_a_time(platform):
    exp_a = make_curated(platform)
    exp_b = make_curated(platform)
    participant = platform.create_participant("Anna")
    inv_a = platform.mint_invitation(exp_a.id, participant.id)
    inv_b = platform.mint_invitation(exp_b.id, participant.id)

    first = platform.open_session_with_token(inv_a.token)
    platform.get_session(first.token)
    second = platform.open_session_with_token(inv_b.token)
    from emomap.errors import NoSession

    with pytest.raises(NoSession):
        platform.get_session(first.token)
    assert platform.get_session(second.token).experiment_id == exp_b.id


# -- tagging loop ------------------------------------------------------------------------


def test_next_picture_walk(platform):
    exp = make_curated(platform, pictures=3)
    _, invitation = join(platform, exp)
    session = platform.open_session_with_token(invitation.token)

    seen = []
    while True:
        pic = platform.next_picture(session)
        if pic is None:
            break
        seen.append(pic)
        platform.submit_tag(session, pic, Placement(0.0, 0.5))
    assert seen == exp.picture_ids
    assert platform.next_picture(session) is None


def test_next_picture_wrong_mode(platform):
    exp = make_field(platform)
    _, invitation = join(platform, exp)
    session = platform.open_session_with_token(invitation.token)
    with pytest.raises(WrongMode):
        platform.next_picture(session)


def test_mild_joy_outer_band(platform):
    exp = make_curated(platform)
    _, invitation = join(platform, exp)
    session = platform.open_session_with_token(invitation.token)
    event = platform.submit_tag(session, exp.picture_ids[0], Placement(0.0, 0.9))
    assert event.classification.label == "serenity"
    assert event.classification.band_index == 2
    assert event.picture_source.value == "CURATED"


def test_retag_supersedes(platform):
    exp = make_curated(platform)
    _, invitation = join(platform, exp)
    session = platform.open_session_with_token(invitation.token)
    pic = exp.picture_ids[0]
    platform.submit_tag(session, pic, Placement(0.0, 0.5))
    platform.submit_tag(session, pic, Placement(0.5, 0.0))
    effective = platform.effective_events(exp.id)
    mine = [e for e in effective if e.picture_id == pic]
    assert len(mine) == 1
    assert mine[0].placement == Placement(0.5, 0.0)
    # full audit trail retained in the log
    assert len(platform._events[exp.id]) == 2


def test_tag_errors(platform, clock):
    exp = make_curated(platform)
    _, invitation = join(platform, exp)
    session = platform.open_session_with_token(invitation.token)
    with pytest.raises(CenterAmbiguous):
        platform.submit_tag(session, exp.picture_ids[0], Placement(0.0, 0.001))
    with pytest.raises(UnknownPicture):
        platform.submit_tag(session, "ghost", Placement(0.0, 0.5))
    clock.advance(days=8)
    with pytest.raises(ExperimentNotActive):
        platform.submit_tag(session, exp.picture_ids[0], Placement(0.0, 0.5))


def test_field_flow_and_missing_location(platform):
    exp = make_field(platform)
    _, invitation = join(platform, exp)
    session = platform.open_session_with_token(invitation.token)

    warsaw = GeoPoint(52.2297, 21.0122)
    picture = platform.submit_field_picture(session, jpeg_bytes(), warsaw)
    data, media_type = platform.picture_bytes(picture.id)
    assert media_type == "image/jpeg"
    assert data == jpeg_bytes()

    with pytest.raises(MissingLocation):
        platform.submit_tag(session, picture.id, Placement(0.0, 0.5))
    event = platform.submit_tag(session, picture.id, Placement(0.0, 0.5), location=warsaw)
    assert event.picture_source.value == "PARTICIPANT"
    assert event.location == warsaw


def test_field_picture_errors(platform, tmp_path, clock):
    exp = make_field(platform)
    _, invitation = join(platform, exp)
    session = platform.open_session_with_token(invitation.token)
    warsaw = GeoPoint(52.2297, 21.0122)

    with pytest.raises(MissingLocation):
        platform.submit_field_picture(session, jpeg_bytes(), None)
    with pytest.raises(UndecodableImage):
        platform.submit_field_picture(session, b"not an image", warsaw)

    small = Platform(
        FileStore(tmp_path / "small"),
        clock=clock,
        id_factory=sequential_ids(),
        max_image_bytes=100,
    )
    sexp = small.create_experiment(mode=Mode.FIELD, start_time=START, finish_time=FINISH)
    small.activate_experiment(sexp.id)
    p = small.create_participant("Anna")
    inv = small.mint_invitation(sexp.id, p.id)
    s = small.open_session_with_token(inv.token)
    with pytest.raises(ImageTooLarge):
        small.submit_field_picture(s, jpeg_bytes(), warsaw)


def test_curated_upload_wrong_mode_for_field_session(platform):
    exp = make_curated(platform)
    _, invitation = join(platform, exp)
    session = platform.open_session_with_token(invitation.token)
    with pytest.raises(WrongMode):
        platform.submit_field_picture(session, jpeg_bytes(), GeoPoint(52.0, 21.0))


def test_png_accepted(platform):
    exp = make_field(platform)
    _, invitation = join(platform, exp)
    session = platform.open_session_with_token(invitation.token)
    picture = platform.submit_field_picture(session, png_bytes(), GeoPoint(52.0, 21.0))
    assert picture.media_type == "image/png"


def test_same_bytes_two_uploads_one_blob(platform):
    exp = make_field(platform)
    anna, inv_a = join(platform, exp, "Anna")
    jan, inv_b = join(platform, exp, "Jan")
    s_a = platform.open_session_with_token(inv_a.token)
    s_b = platform.open_session_with_token(inv_b.token)
    pic_a = platform.submit_field_picture(s_a, jpeg_bytes(), GeoPoint(52.0, 21.0))
    pic_b = platform.submit_field_picture(s_b, jpeg_bytes(), GeoPoint(52.1, 21.1))
    assert pic_a.id != pic_b.id
    assert pic_a.blob_id == pic_b.blob_id
    assert len(platform.store.blob_metadata(pic_a.blob_id)) == 2


# -- invariants ------------------------------------------------------------------------


def test_classification_recomputation_invariant(platform):
    exp = make_curated(platform, pictures=5)
    _, invitation = join(platform, exp)
    session = platform.open_session_with_token(invitation.token)
    placements = [Placement(0.1, 0.7), Placement(-0.4, -0.2), Placement(0.6, 0.1)]
    for placement in placements:
        pic = platform.next_picture(session)
        platform.submit_tag(session, pic, placement)
    tag_map = platform.get_tag_map(exp.tag_map_id)
    for event in platform.effective_events(exp.id):
        assert event.classification == classify(tag_map, event.placement)


def test_log_replay_reproduces_export(platform, file_store, clock):
    exp = make_curated(platform, pictures=3)
    _, invitation = join(platform, exp)
    session = platform.open_session_with_token(invitation.token)
    for _ in range(3):
        pic = platform.next_picture(session)
        platform.submit_tag(session, pic, Placement(0.3, 0.3))
        clock.advance(seconds=7)
    before = platform.export_csv(exp.id)

    replayed = Platform(FileStore(file_store.root), clock=clock)
    assert replayed.export_csv(exp.id) == before
    assert before.count("\n") == 4  # header + 3 rows


# -- views ---------------------------------------------------------------------------------


def test_per_user_view(platform, clock):
    exp = make_curated(platform, pictures=3)
    _, invitation = join(platform, exp)
    session = platform.open_session_with_token(invitation.token)
    for _ in range(3):
        pic = platform.next_picture(session)
        platform.submit_tag(session, pic, Placement(0.0, 0.5))
        clock.advance(seconds=1)
    entries = platform.per_user_view(exp.id, session.participant_id)
    assert len(entries) == 3
    assert [e.picture_id for e in entries] == exp.picture_ids

    # supersede the first picture: still 3 entries, latest placement shown
    platform.submit_tag(session, exp.picture_ids[0], Placement(0.5, 0.0))
    entries = platform.per_user_view(exp.id, session.participant_id)
    assert len(entries) == 3
    by_pic = {e.picture_id: e for e in entries}
    assert by_pic[exp.picture_ids[0]].placement == Placement(0.5, 0.0)

    with pytest.raises(UnknownParticipant):
        platform.per_user_view(exp.id, "ghost")


def test_per_picture_view(platform):
    exp = make_curated(platform, pictures=2)
    anna, inv_a = join(platform, exp, "Anna")
    jan, inv_b = join(platform, exp, "Jan")
    place = Placement(0.0, 0.5)
    platform.submit_tag(platform.open_session_with_token(inv_a.token), exp.picture_ids[0], place)
    platform.submit_tag(platform.open_session_with_token(inv_b.token), exp.picture_ids[0], place)

    summary, events = platform.per_picture_view(exp.id, exp.picture_ids[0])
    assert summary.n == 2
    assert summary.resultant_length == pytest.approx(1.0, abs=1e-9)
    assert {e.participant_id for e in events} == {anna.id, jan.id}

    untagged, no_events = platform.per_picture_view(exp.id, exp.picture_ids[1])
    assert untagged.n == 0
    assert untagged.mean_angle_deg is None
    assert no_events == []

    with pytest.raises(UnknownPicture):
        platform.per_picture_view(exp.id, "ghost")

    # recomputation oracle
    from emomap.aggregate import summarize

    recomputed = summarize(events, platform.get_tag_map(exp.tag_map_id))
    assert recomputed == summary


def test_emotion_map_from_field_events(platform):
    exp = make_field(platform)
    _, invitation = join(platform, exp)
    session = platform.open_session_with_token(invitation.token)
    for i, (lat, lon) in enumerate([(52.2297, 21.0122), (52.2297, 21.0122), (52.25, 21.05)]):
        picture = platform.submit_field_picture(
            session, jpeg_bytes(color=(i * 60, 90, 30)), GeoPoint(lat, lon)
        )
        platform.submit_tag(session, picture.id, Placement(0.0, 0.5), location=GeoPoint(lat, lon))
    agg = platform.emotion_map(exp.id, 0.01)
    assert {(c.cell_lat_index, c.cell_lon_index) for c in agg.cells} == {(5222, 2101), (5225, 2105)}
    assert sum(c.summary.n for c in agg.cells) == 3


def test_concurrent_tags_all_durably_recorded(platform, file_store):
    import threading

    exp = make_curated(platform, pictures=4)
    sessions = []
    for i in range(8):
        participant = platform.create_participant(f"P{i}")
        invitation = platform.mint_invitation(exp.id, participant.id)
        sessions.append(platform.open_session_with_token(invitation.token))

    errors = []

    def tag_all(session):
        try:
            for pic in exp.picture_ids:
                platform.submit_tag(session, pic, Placement(0.1, 0.4))
        except Exception as exc:  # pragma: no cover - failure diagnostics
            errors.append(exc)

    threads = [threading.Thread(target=tag_all, args=(s,)) for s in sessions]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert len(platform.effective_events(exp.id)) == 8 * 4
    # every event is durable: a fresh replay sees all of them
    replayed = Platform(FileStore(file_store.root))
    assert len(replayed.effective_events(exp.id)) == 8 * 4


# -- researcher auth -------------------------------------------------------------------------


def test_researcher_login_and_token(platform, clock):
    platform.create_researcher("maria", "tajnehaslo")
    token, expires = platform.researcher_login("maria", "tajnehaslo")
    assert platform.verify_researcher_token(token).username == "maria"
    assert expires == BASE_TIME + timedelta(hours=24)

    with pytest.raises(BadCredentials):
        platform.researcher_login("maria", "zle")
    with pytest.raises(BadCredentials):
        platform.verify_researcher_token("bogus")

    clock.advance(hours=25)
    with pytest.raises(BadCredentials):
        platform.verify_researcher_token(token)
