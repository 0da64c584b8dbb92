import numpy as np
import pytest

from gradpath import InputError, make_instance, parse_instance


def test_known_names():
    for name in ("quad-geom", "quad-random", "pkl-lower", "pkl-lower-gf",
                 "pkl-lower-gd", "fsep-quartic"):
        inst = make_instance(name)
        assert inst.objective.dim == len(inst.x0)


def test_parse_with_parameters():
    inst = parse_instance("quad-geom:d=3,omega=4")
    assert inst.objective.dim == 3
    assert inst.objective.L == pytest.approx(16.0)
    assert inst.eta == pytest.approx(1.0 / 32.0)


def test_parse_seed_is_integer():
    a = parse_instance("quad-random:d=5,kappa=50,seed=2")
    b = parse_instance("quad-random:d=5,kappa=50,seed=2")
    assert np.array_equal(a.x0, b.x0)


def test_descent_instance_carries_admissible_step():
    inst = make_instance("pkl-lower-gd", d=10)
    assert 0.25 <= inst.eta <= 0.5


def test_unknown_name_rejected():
    with pytest.raises(InputError, match="unknown objective"):
        make_instance("mystery")


def test_bad_parameter_rejected():
    with pytest.raises(InputError, match="bad parameter"):
        parse_instance("quad-geom:d~3")
    with pytest.raises(InputError, match="bad parameters"):
        parse_instance("quad-geom:radius=3")
