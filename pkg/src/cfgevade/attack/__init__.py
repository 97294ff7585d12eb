# Init for cfgevade.attack package
from .state import AttackConfig, AttackOutcome, AttackStatus, Replacement, IMPORT_NAME_CHARS
from .explainability import ExplainabilityAttack, attack_sample, gen_import_name
from .campaign import CampaignRunner, CampaignStats, TrialStats, run_campaign
