from fabula.analysis import check_toggling
from fabula.micro import random_micro
from fabula.pddl import load_narrative


def test_same_seed_same_text():
    assert random_micro(7).text == random_micro(7).text
    assert random_micro(7).text != random_micro(8).text


def test_limits_respected():
    for seed in range(60):
        micro = random_micro(seed, max_characters=3, max_predicates=2, max_actions=4)
        d, p = load_narrative(micro.text)
        chars = [o for o, t in p.objects.items() if t == "character"]
        assert 2 <= len(chars) <= 3
        assert 1 <= len(d.predicates) <= 2
        assert 2 <= len(d.actions) <= 4
        assert p.outcome


def test_toggling_mode():
    for seed in range(60):
        d, _ = load_narrative(random_micro(seed).text)
        assert check_toggling(d).all_toggling, seed


def test_non_toggling_mode_loads():
    for seed in range(30):
        load_narrative(random_micro(seed, toggling=False).text)
