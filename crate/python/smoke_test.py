"""Smoke test for the `tilting` extension module.

Build and install first:  pip install ./crates/python --no-build-isolation
"""

import json

import tilting


def main():
    p2 = tilting.Surface([(1, 0), (0, 1), (-1, -1)], name="p2")
    assert p2.ksq == 9
    assert p2.classify()["kind"] == "del-pezzo"
    h = p2.ray_divisor(0)
    assert p2.cohomology([-3 * x for x in h]) == (0, 0, 1)

    beilinson = tilting.Collection.lines(p2, [[0, 0, 0], h, [2 * x for x in h]])
    assert beilinson.slopes() == ["0", "3", "6"]
    cert = tilting.certify(beilinson)
    assert cert.verdict == "two-tilting", cert
    series = tilting.hilbert_series(beilinson, cert, n_max=5)
    pi3 = next(s for s in series if s["label"] == "Pi3")
    assert pi3["coeffs"][:2] == [15, 96], pi3
    assert all(s["certificate"] == cert.id for s in series)

    s2 = tilting.Surface([(1, 0), (0, 1), (-1, 2), (0, -1)], name="sigma2")
    assert s2.classify()["kind"] == "weak-del-pezzo"
    assert tilting.anticanonical_series(s2, 3) == [1, 9, 25, 49]

    dp3 = tilting.Surface(
        [(1, 0), (0, 1), (-1, 2), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (2, -1)],
        name="weak-dp3",
    )
    initial, final, c = tilting.construct(dp3)
    assert c.is_two_tilting()
    assert len(final) == 9 and final.extensions()
    again = tilting.Collection.from_json(final.to_json())
    assert tilting.certify(again).id == c.id

    try:
        tilting.Surface([(1, 0), (0, 1), (-1, 3), (0, -1)]).classify()
        tilting.construct(tilting.Surface([(1, 0), (0, 1), (-1, 3), (0, -1)]))
    except tilting.TiltingError as e:
        print("rejected sigma3:", e)
    else:
        raise AssertionError("sigma3 should be rejected")

    report = p2.check_properties(samples=50)
    assert not report["failures"], json.dumps(report)
    print("ok:", cert, c)


if __name__ == "__main__":
    main()
