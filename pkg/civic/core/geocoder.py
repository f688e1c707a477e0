"""Client for an optional remote reverse geocoder that returns block-group GEOIDs."""

import re
from typing import Optional

import httpx

from . import utility as util
from .exceptions import (
    GeocoderError,
    GeocoderParseError,
    GeocoderResponseError,
    GeocoderTimeoutError,
)
from .models import GEOID_REGEX


def fetch_geoid_remote(
    lat: float,
    lon: float,
    endpoint: str,
    timeout: Optional[float] = None,
    client: Optional[httpx.Client] = None,
) -> str:
    """
    Makes a GET request to the reverse geocoder and returns the block-group GEOID.

    Parameters
    ----------
    lat : float
        Latitude of the point.
    lon : float
        Longitude of the point.
    endpoint : str
        URL of the geocoder; called as {endpoint}?lat=...&lon=...
    timeout : float, optional
        Request timeout in seconds, by default the value of CIVIC_GEOCODER_TIMEOUT.
    client : httpx.Client, optional
        Client to send the request with, by default a one-off client.

    Returns
    -------
    str
        The 12-digit GEOID from the "geoid" key of the JSON response.
    """
    if timeout is None:
        timeout = util.GEOCODER_TIMEOUT.val
    params = {"lat": lat, "lon": lon}
    try:
        if client is None:
            response = httpx.get(endpoint, params=params, timeout=timeout)
        else:
            response = client.get(endpoint, params=params, timeout=timeout)
    except httpx.TimeoutException as exc:
        raise GeocoderTimeoutError(
            f"Timed out after {timeout}s while contacting the geocoder at {endpoint}."
        ) from exc
    except httpx.TransportError as exc:
        raise GeocoderError(
            f"Could not connect to the geocoder at {endpoint}: {exc}"
        ) from exc

    if not response.is_success:
        raise GeocoderResponseError(
            status_code=response.status_code,
            detail=f"{response.status_code} {response.reason_phrase}: {response.text}",
        )

    try:
        body = response.json()
    except ValueError as exc:
        raise GeocoderParseError(
            "The geocoder response is not valid JSON."
        ) from exc

    geoid = body.get("geoid") if isinstance(body, dict) else None
    if not isinstance(geoid, str) or not re.match(GEOID_REGEX, geoid):
        raise GeocoderParseError(
            f"The geocoder response carries no block-group GEOID: {body!r}"
        )
    return geoid


class RemoteGeocoder:
    """Callable (lat, lon) -> geoid bound to one endpoint and client, for use in `fuse`."""

    def __init__(
        self,
        endpoint: str,
        timeout: Optional[float] = None,
        client: Optional[httpx.Client] = None,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.client = client

    def __call__(self, lat: float, lon: float) -> str:
        return fetch_geoid_remote(
            lat, lon, self.endpoint, timeout=self.timeout, client=self.client
        )


def geocoder_from_env(client: Optional[httpx.Client] = None) -> Optional[RemoteGeocoder]:
    """A RemoteGeocoder for CIVIC_GEOCODER_URL, or None if the variable is unset."""
    if not util.GEOCODER_URL.val:
        return None
    return RemoteGeocoder(util.GEOCODER_URL.val, client=client)
