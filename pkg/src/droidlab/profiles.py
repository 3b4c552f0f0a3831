"""Shipped corpus profiles: desk-scale defaults plus scenario-focused variants.

Families are built from a shared Android-flavored vocabulary.  Class markers
are one-sided, neutral plumbing appears everywhere, every family carries a
few unique markers (campaign infrastructure, custom components), and each
profile plants one "twin" pair: a goodware family and a malware family drawn
from the same prototype, which puts a floor under every detector's error the
way real lookalike apps do.
"""

from __future__ import annotations

import random

from .ir import ClassLabel, YearMonth
from .synth import FamilyProfile, GeneratorConfig

NEUTRAL_PERMISSIONS = [
    "android.permission.INTERNET",
    "android.permission.ACCESS_NETWORK_STATE",
    "android.permission.WAKE_LOCK",
    "android.permission.VIBRATE",
]
GOODWARE_PERMISSIONS = [
    "android.permission.ACCESS_COARSE_LOCATION",
    "android.permission.BLUETOOTH",
    "android.permission.NFC",
    "android.permission.SET_WALLPAPER",
    "android.permission.READ_EXTERNAL_STORAGE",
]
MALWARE_PERMISSIONS = [
    "android.permission.READ_SMS",
    "android.permission.SEND_SMS",
    "android.permission.RECEIVE_BOOT_COMPLETED",
    "android.permission.READ_PHONE_STATE",
    "android.permission.SYSTEM_ALERT_WINDOW",
    "android.permission.READ_CONTACTS",
    "android.permission.CALL_PHONE",
    "android.permission.GET_ACCOUNTS",
]

NEUTRAL_INTENTS = [
    "android.intent.action.MAIN",
    "android.intent.action.VIEW",
]
GOODWARE_INTENTS = [
    "android.intent.action.SEND",
    "android.intent.action.PICK",
    "android.intent.action.GET_CONTENT",
]
MALWARE_INTENTS = [
    "android.intent.action.BOOT_COMPLETED",
    "android.provider.Telephony.SMS_RECEIVED",
    "android.intent.action.PACKAGE_ADDED",
    "android.intent.action.NEW_OUTGOING_CALL",
]

NEUTRAL_COMPONENTS = ["activity:MainActivity", "activity:SettingsActivity"]
GOODWARE_COMPONENTS = [
    "activity:GalleryActivity",
    "activity:PlayerActivity",
    "service:SyncService",
    "provider:MediaCacheProvider",
]
MALWARE_COMPONENTS = [
    "receiver:BootReceiver",
    "receiver:SmsReceiver",
    "service:RemoteControlService",
    "service:PushDaemon",
]

GOODWARE_FEATURES = [
    "android.hardware.camera",
    "android.hardware.bluetooth",
    "android.hardware.screen.portrait",
    "android.hardware.nfc",
]
MALWARE_FEATURES = [
    "android.hardware.telephony",
    "android.hardware.location.gps",
    "android.hardware.microphone",
]

NEUTRAL_STRINGS = ["config.json", "user_prefs", "cache_dir", "UTF-8", "session_token"]
GOODWARE_STRINGS = [
    "https://cdn.photofeed.app/assets",
    "https://api.tunebox.io/v2/stream",
    "album_index",
    "wallpaper_dev",
    "leaderboard",
]
MALWARE_STRINGS = [
    "http://m4lw4.re",
    "http://c2.updatesrv.net/gate.php",
    "SUBSCRIBE",
    "0x3d93cb",
    "sms_premium_77",
]
AD_STRINGS = ["http://ads.clickfeed.biz/imp", "banner_320x50", "offerwall_id"]

NEUTRAL_APIS = [
    "Landroid/content/Intent;-><init>",
    "Landroid/content/Context;->getSystemService",
    "Landroid/util/Log;->d",
    "Ljava/lang/StringBuilder;->append",
    "Landroid/os/Handler;->post",
]
GOODWARE_APIS = [
    "Landroid/view/View;->setOnClickListener",
    "Landroid/widget/TextView;->setText",
    "Landroid/app/WallpaperManager;->setWallpaper",
    "Landroid/graphics/BitmapFactory;->decodeFile",
    "Landroid/media/MediaPlayer;->start",
    "Ljava/net/HttpURLConnection;->connect",
    "Landroid/net/wifi/WifiManager;->getConnectionInfo",
    "Landroid/content/SharedPreferences;->getString",
]
MALWARE_APIS = [
    "Landroid/telephony/SmsManager;->sendTextMessage",
    "Landroid/telephony/TelephonyManager;->getDeviceId",
    "Landroid/telephony/TelephonyManager;->getLine1Number",
    "Ljava/lang/Runtime;->exec",
    "Ljavax/crypto/Cipher;->doFinal",
    "Landroid/util/Base64;->decode",
    "Landroid/content/pm/PackageManager;->getInstalledPackages",
    "Landroid/location/LocationManager;->getLastKnownLocation",
    "Landroid/media/MediaRecorder;->start",
    "Ljava/net/URL;->openConnection",
    "Landroid/app/admin/DevicePolicyManager;->lockNow",
]

_STRAIGHT_GOOD = [
    "const-string", "invoke-virtual", "move-result-object", "iget-object",
    "iput-object", "new-instance", "invoke-direct", "const/4", "sget-object",
    "check-cast", "invoke-interface", "move-result", "add-int/2addr",
]
_STRAIGHT_MAL = [
    "const-string", "invoke-static", "move-result-object", "xor-int/2addr",
    "aget-byte", "aput-byte", "array-length", "const/16", "rem-int",
    "invoke-virtual", "move-exception", "int-to-byte", "shr-int/lit8",
]
_TRANSFER_GOOD = ["return-void", "if-eqz", "goto", "return-object"]
_TRANSFER_MAL = ["if-nez", "if-lt", "goto", "return", "throw"]

VTD_GOODWARE = {0: 1.0}
VTD_GREY_LOW = {1: 0.35, 2: 0.30, 3: 0.20, 4: 0.10, 5: 0.04, 6: 0.01}
VTD_GREY_HIGH = {2: 0.05, 3: 0.10, 4: 0.20, 5: 0.30, 6: 0.35}
VTD_MALWARE = {7: 0.10, 9: 0.15, 12: 0.20, 16: 0.20, 22: 0.15, 30: 0.12, 40: 0.08}


def _templates(rng: random.Random, lean: float, count: int) -> tuple[tuple[str, ...], ...]:
    """Straight-line opcode runs; lean is the share drawn from the malicious pool."""
    out = []
    for _ in range(count):
        body = []
        for _ in range(rng.randint(3, 7)):
            pool = _STRAIGHT_MAL if rng.random() < lean else _STRAIGHT_GOOD
            body.append(rng.choice(pool))
        if rng.random() < 0.7:
            tail = _TRANSFER_MAL if rng.random() < lean else _TRANSFER_GOOD
            body.append(rng.choice(tail))
        out.append(tuple(body))
    return tuple(out)


def _merge(proto: dict[str, dict[str, float]], cat: str, names: list[str], p: float):
    proto.setdefault(cat, {})
    for n in names:
        proto[cat].setdefault(n, p)


def _unique_markers(fid: str) -> dict[str, list[str]]:
    """Family-specific campaign infrastructure: only this family can carry it."""
    return {
        "api-call": [f"Lnet/{fid}/Core;->beacon", f"Lnet/{fid}/Core;->sync"],
        "string": [f"http://{fid}.cc/gate", f"{fid}_cfg"],
        "component": [f"service:{fid.capitalize()}Service"],
        "permission": [f"com.{fid}.permission.ACCESS"],
    }


def _base_prototype(rng: random.Random, malicious: bool, *,
                    shared_strength: float, cross_noise: float) -> dict[str, dict[str, float]]:
    own_perm, other_perm = (
        (MALWARE_PERMISSIONS, GOODWARE_PERMISSIONS) if malicious
        else (GOODWARE_PERMISSIONS, MALWARE_PERMISSIONS)
    )
    own_int, other_int = (
        (MALWARE_INTENTS, GOODWARE_INTENTS) if malicious
        else (GOODWARE_INTENTS, MALWARE_INTENTS)
    )
    own_comp, other_comp = (
        (MALWARE_COMPONENTS, GOODWARE_COMPONENTS) if malicious
        else (GOODWARE_COMPONENTS, MALWARE_COMPONENTS)
    )
    own_hw, other_hw = (
        (MALWARE_FEATURES, GOODWARE_FEATURES) if malicious
        else (GOODWARE_FEATURES, MALWARE_FEATURES)
    )
    own_str, other_str = (
        (MALWARE_STRINGS, GOODWARE_STRINGS) if malicious
        else (GOODWARE_STRINGS, MALWARE_STRINGS)
    )
    own_api, other_api = (
        (MALWARE_APIS, GOODWARE_APIS) if malicious
        else (GOODWARE_APIS, MALWARE_APIS)
    )
    proto: dict[str, dict[str, float]] = {}
    _merge(proto, "permission", rng.sample(own_perm, 3), shared_strength)
    _merge(proto, "intent", rng.sample(own_int, 2), shared_strength)
    _merge(proto, "component", rng.sample(own_comp, 2), shared_strength)
    _merge(proto, "hw-feature", rng.sample(own_hw, 1), shared_strength)
    _merge(proto, "string", rng.sample(own_str, 2), shared_strength)
    _merge(proto, "api-call", rng.sample(own_api, 4), shared_strength)
    # Everyday plumbing.
    _merge(proto, "permission", NEUTRAL_PERMISSIONS, 0.5)
    _merge(proto, "intent", NEUTRAL_INTENTS, 0.6)
    _merge(proto, "component", NEUTRAL_COMPONENTS, 0.6)
    _merge(proto, "string", NEUTRAL_STRINGS, 0.3)
    _merge(proto, "api-call", NEUTRAL_APIS, 0.45)
    # Rest of the own-class pool at moderate probability.
    _merge(proto, "permission", own_perm, 0.18)
    _merge(proto, "string", own_str, 0.15)
    _merge(proto, "api-call", own_api, 0.2)
    # Cross-class noise.
    _merge(proto, "permission", other_perm, cross_noise)
    _merge(proto, "intent", other_int, cross_noise)
    _merge(proto, "component", other_comp, cross_noise)
    _merge(proto, "hw-feature", other_hw, cross_noise)
    _merge(proto, "string", other_str, cross_noise)
    _merge(proto, "api-call", other_api, cross_noise)
    return proto


def _family(fid: str, tendency: ClassLabel, rng: random.Random,
            birth: YearMonth, death: YearMonth, *,
            shared_strength: float = 0.7, cross_noise: float = 0.08,
            unique_strength: float = 0.8, lean: float | None = None,
            vtd_dist: dict[int, float] | None = None,
            burst: dict[int, float] | None = None,
            prototype: dict[str, dict[str, float]] | None = None,
            templates: tuple[tuple[str, ...], ...] | None = None) -> FamilyProfile:
    malicious = tendency == ClassLabel.MALWARE
    if lean is None:
        lean = 0.8 if malicious else 0.15
    if prototype is None:
        prototype = _base_prototype(rng, malicious, shared_strength=shared_strength,
                                    cross_noise=cross_noise)
    else:
        prototype = {c: dict(v) for c, v in prototype.items()}
    if unique_strength > 0:
        for cat, names in _unique_markers(fid).items():
            _merge(prototype, cat, names, unique_strength)
    if vtd_dist is None:
        vtd_dist = {
            ClassLabel.GOODWARE: VTD_GOODWARE,
            ClassLabel.GREYWARE: VTD_GREY_LOW,
            ClassLabel.MALWARE: VTD_MALWARE,
        }[tendency]
    return FamilyProfile(
        family_id=fid,
        tendency=tendency,
        prototype=prototype,
        vtd_dist=vtd_dist,
        birth=birth,
        death=death,
        block_templates=templates if templates is not None else _templates(rng, lean, 6),
        burst_dist=burst or {},
    )


def _twin_pair(rng: random.Random, good_id: str, mal_id: str,
               birth: YearMonth, death: YearMonth) -> tuple[FamilyProfile, FamilyProfile]:
    """A goodware/malware pair drawn from one prototype; only VTD differs."""
    proto = _base_prototype(rng, malicious=False, shared_strength=0.45, cross_noise=0.25)
    _merge(proto, "permission", rng.sample(MALWARE_PERMISSIONS, 2), 0.4)
    _merge(proto, "api-call", rng.sample(MALWARE_APIS, 2), 0.4)
    templates = _templates(rng, 0.45, 6)
    good = _family(good_id, ClassLabel.GOODWARE, rng, birth, death,
                   prototype=proto, templates=templates, unique_strength=0.0)
    mal = _family(mal_id, ClassLabel.MALWARE, rng, birth, death,
                  prototype=proto, templates=templates, unique_strength=0.0)
    return good, mal


def _grey_family(fid: str, rng: random.Random, birth: YearMonth, death: YearMonth,
                 malware_like: bool) -> FamilyProfile:
    proto = _base_prototype(rng, malicious=malware_like,
                            shared_strength=0.4, cross_noise=0.2)
    _merge(proto, "string", AD_STRINGS, 0.7)
    _merge(proto, "component", ["service:AdService"], 0.6)
    return _family(
        fid, ClassLabel.GREYWARE, rng, birth, death,
        prototype=proto,
        vtd_dist=VTD_GREY_HIGH if malware_like else VTD_GREY_LOW,
        lean=0.6 if malware_like else 0.3,
        unique_strength=0.5,
    )


def desk_profile(seed: int = 20140101) -> GeneratorConfig:
    """Default CI-speed corpus: 24 months, 30/month/class, 12 families."""
    rng = random.Random(seed)
    start = YearMonth(2014, 1)
    end = YearMonth(2015, 12)
    twin_good, twin_mal = _twin_pair(rng, "freeflash", "trojanpuzzle", start, end)
    fams = [
        _family("photofeed", ClassLabel.GOODWARE, rng, start, end),
        _family("tunebox", ClassLabel.GOODWARE, rng, start, end),
        _family("kartrace", ClassLabel.GOODWARE, rng, start, end),
        twin_good,
        _grey_family("adkit", rng, start, end, malware_like=False),
        _grey_family("bundlr", rng, start, end, malware_like=False),
        _grey_family("riskpack", rng, start, end, malware_like=True),
        _family("smsthief", ClassLabel.MALWARE, rng, start, YearMonth(2015, 6),
                burst={2: 0.7, 3: 0.3}),
        _family("lockerbot", ClassLabel.MALWARE, rng, start, end),
        _family("spyloc", ClassLabel.MALWARE, rng, start, end, burst={2: 0.6, 4: 0.4}),
        _family("bankhook", ClassLabel.MALWARE, rng, YearMonth(2014, 7), end),
        twin_mal,
    ]
    return GeneratorConfig(
        seed=seed,
        start=start,
        months=24,
        quota={ClassLabel.GOODWARE: 30, ClassLabel.GREYWARE: 30, ClassLabel.MALWARE: 30},
        families=tuple(fams),
        mutation_rate=0.06,
        duplicate_fraction=0.1,
    )


def redundancy_profile(seed: int = 77) -> GeneratorConfig:
    """Heavy exact duplication concentrated in two easy malware families;
    the remaining malware families are subtle and data-hungry."""
    rng = random.Random(seed)
    start = YearMonth(2014, 1)
    end = YearMonth(2014, 12)
    bulk_burst = {4: 0.4, 6: 0.35, 10: 0.25}
    twin_good, twin_mal = _twin_pair(rng, "freeflash", "nichebot-0", start, end)
    fams = [
        _family("photofeed", ClassLabel.GOODWARE, rng, start, end),
        _family("tunebox", ClassLabel.GOODWARE, rng, start, end),
        _family("kartrace", ClassLabel.GOODWARE, rng, start, end),
        twin_good,
        _family("floodware-a", ClassLabel.MALWARE, rng, start, end,
                shared_strength=0.95, unique_strength=0.95, burst=bulk_burst),
        _family("floodware-b", ClassLabel.MALWARE, rng, start, end,
                shared_strength=0.95, unique_strength=0.95, burst=bulk_burst),
        twin_mal,
        _family("nichebot-1", ClassLabel.MALWARE, rng, start, end,
                shared_strength=0.3, cross_noise=0.2, unique_strength=0.5, lean=0.5),
        _family("nichebot-2", ClassLabel.MALWARE, rng, start, end,
                shared_strength=0.3, cross_noise=0.2, unique_strength=0.5, lean=0.5),
        _family("nichebot-3", ClassLabel.MALWARE, rng, start, end,
                shared_strength=0.3, cross_noise=0.2, unique_strength=0.5, lean=0.5),
    ]
    return GeneratorConfig(
        seed=seed,
        start=start,
        months=12,
        quota={ClassLabel.GOODWARE: 40, ClassLabel.MALWARE: 40},
        families=tuple(fams),
        mutation_rate=0.05,
        duplicate_fraction=0.5,
    )


def drift_profile(seed: int = 2016) -> GeneratorConfig:
    """Half the malware families are born after the first year, with mostly
    new campaign infrastructure."""
    rng = random.Random(seed)
    start = YearMonth(2014, 1)
    end = YearMonth(2015, 12)
    mid = YearMonth(2015, 1)
    fams = [
        _family("photofeed", ClassLabel.GOODWARE, rng, start, end),
        _family("tunebox", ClassLabel.GOODWARE, rng, start, end),
        _family("holopad", ClassLabel.GOODWARE, rng, mid, end,
                shared_strength=0.35, cross_noise=0.15),
        _family("smsthief", ClassLabel.MALWARE, rng, start, end,
                shared_strength=0.45, unique_strength=0.9),
        _family("lockerbot", ClassLabel.MALWARE, rng, start, end,
                shared_strength=0.45, unique_strength=0.9),
        _family("wormlet", ClassLabel.MALWARE, rng, mid, end,
                shared_strength=0.2, cross_noise=0.25, unique_strength=0.9, lean=0.45),
        _family("cryptolure", ClassLabel.MALWARE, rng, mid, end,
                shared_strength=0.2, cross_noise=0.25, unique_strength=0.9, lean=0.45),
    ]
    return GeneratorConfig(
        seed=seed,
        start=start,
        months=24,
        quota={ClassLabel.GOODWARE: 30, ClassLabel.MALWARE: 30},
        families=tuple(fams),
        mutation_rate=0.05,
        duplicate_fraction=0.0,
    )


def mini_profile(seed: int = 5) -> GeneratorConfig:
    """Six months, tiny quotas; for fast pipeline tests."""
    rng = random.Random(seed)
    start = YearMonth(2014, 1)
    end = YearMonth(2014, 6)
    fams = [
        _family("photofeed", ClassLabel.GOODWARE, rng, start, end),
        _family("tunebox", ClassLabel.GOODWARE, rng, start, end),
        _grey_family("adkit", rng, start, end, malware_like=False),
        _family("smsthief", ClassLabel.MALWARE, rng, start, end),
        _family("lockerbot", ClassLabel.MALWARE, rng, start, end),
    ]
    return GeneratorConfig(
        seed=seed,
        start=start,
        months=6,
        quota={ClassLabel.GOODWARE: 12, ClassLabel.GREYWARE: 8, ClassLabel.MALWARE: 12},
        families=tuple(fams),
        mutation_rate=0.05,
        duplicate_fraction=0.0,
    )


PROFILES = {
    "desk": desk_profile,
    "redundancy": redundancy_profile,
    "drift": drift_profile,
    "mini": mini_profile,
}
