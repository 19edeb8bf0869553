from nest.core import Module

from .privacy_service import PrivacyService


@Module(providers=[PrivacyService], exports=[PrivacyService])
class PrivacyModule:
    pass
