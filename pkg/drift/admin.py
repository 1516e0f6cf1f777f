from django.contrib import admin

from .models import ExperimentRun, LeewayObject, MetricRecord


@admin.register(LeewayObject)
class LeewayObjectAdmin(admin.ModelAdmin):
    list_display = ("slug", "name", "mass", "area_air", "area_water")
    search_fields = ("slug", "name")


class MetricRecordInline(admin.TabularInline):
    model = MetricRecord
    extra = 0


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ("id", "created_at", "config_hash", "seed", "status")
    list_filter = ("status",)
    inlines = (MetricRecordInline,)


admin.site.register(MetricRecord)
