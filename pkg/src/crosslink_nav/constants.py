"""Physical constants and Earth-Moon normalization units."""

SPEED_OF_LIGHT = 299792458.0  # m/s

GM_EARTH = 398600.4418  # km^3/s^2
GM_MOON = 4902.800066  # km^3/s^2
GM_SUN = 1.32712440018e11  # km^3/s^2

AU_KM = 149597870.7
SOLAR_FLUX_1AU = 1361.0  # W/m^2

EARTH_RADIUS_KM = 6378.1363
MOON_RADIUS_KM = 1737.4

# Earth-Moon CRTBP normalization
MU_EARTH_MOON = 0.01215
T_STAR_DAYS = 4.343
L_STAR_KM = 384747.96

SECONDS_PER_DAY = 86400.0

# states closer than this (non-dimensional) to a primary are rejected
SINGULARITY_RADIUS = 1e-9
