from engine.errors import ConfigError
from engine.maps_2x2 import ADLER_YAMILOV, CASE1, CASE2, GENERAL_2X2
from engine.maps_3x3 import BOUSSINESQ, GV, GV_VECTOR, YB3


MAPS = {
    descriptor.name: descriptor
    for descriptor in (CASE1, CASE2, ADLER_YAMILOV, GENERAL_2X2, YB3, BOUSSINESQ, GV, GV_VECTOR)
}


def map_ids():
    return sorted(MAPS)


def get_map(map_id):

    try:
        return MAPS[map_id]
    except KeyError:
        raise ConfigError(f"unknown map id {map_id!r}", {"known": map_ids()}) from None
