# Init for cfgevade.evaluation package
from .report import render_report, write_report, load_campaigns, plot_success_rates
